//! Analytic elimination of the linear parameters.
//!
//! For fixed nonlinear parameters the model is linear in (gamma, A, B, C) with
//! regressors (zeta, 1, f, g). Least squares over the window reduces to the
//! 4x4 normal-equation system
//!
//! ```text
//! sum_t [zeta^2  zeta    zeta*f  zeta*g] [gamma]   sum_t [zeta * ln p]
//!       [zeta    1       f       g     ] [  A  ] = | ln p           |
//!       [zeta*f  f       f^2     f*g   ] [  B  ]   | f * ln p       |
//!       [zeta*g  g       f*g     g^2   ] [  C  ]   [ g * ln p       ]
//! ```
//!
//! The plain JLS model fixes gamma = 0 and solves the analogous 3x3 system.
//! The cost of a nonlinear point is the residual sum of squares after slaving,
//! which is what every search stage minimizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::FactorSeries;
use crate::model::{basis_raw, LinearParams, NonlinearParams};

/// Which nested model is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Plain JLS: gamma fixed at 0.
    Jls,
    /// JLS augmented with the Zipf factor loading gamma.
    Zipf,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Jls => "jls",
            ModelKind::Zipf => "zipf",
        }
    }

    /// Number of linear parameters the model estimates.
    pub fn n_linear(&self) -> usize {
        match self {
            ModelKind::Jls => 3,
            ModelKind::Zipf => 4,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jls" => Ok(ModelKind::Jls),
            "zipf" => Ok(ModelKind::Zipf),
            other => Err(Error::Config(format!("unknown model {other:?}, expected jls or zipf"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gaussian elimination with partial pivoting on an n x n system (n <= 4).
/// Pivots below `1e-13 * max |a_ij|` signal a rank-deficient system.
fn solve_normal_system(mut a: [[f64; 4]; 4], mut b: [f64; 4], n: usize) -> Result<[f64; 4]> {
    let mut scale = 0.0f64;
    for row in a.iter().take(n) {
        for v in row.iter().take(n) {
            scale = scale.max(v.abs());
        }
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::RankDeficient("degenerate normal equations".into()));
    }
    let tol = scale * 1e-13;

    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if a[r][k].abs() > a[piv][k].abs() {
                piv = r;
            }
        }
        if a[piv][k].abs() <= tol {
            return Err(Error::RankDeficient(format!(
                "pivot {:.3e} below threshold {tol:.3e} at column {k}",
                a[piv][k]
            )));
        }
        if piv != k {
            a.swap(piv, k);
            b.swap(piv, k);
        }
        for r in k + 1..n {
            let factor = a[r][k] / a[k][k];
            for c in k..n {
                a[r][c] -= factor * a[k][c];
            }
            b[r] -= factor * b[k];
        }
    }
    let mut x = [0.0f64; 4];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k][c] * x[c];
        }
        x[k] = s / a[k][k];
    }
    Ok(x)
}

/// Borrowed view of the columns a fit consumes.
#[derive(Clone, Copy)]
pub(crate) struct FitData<'a> {
    pub t: &'a [i64],
    pub ln_p: &'a [f64],
    pub zeta: &'a [f64],
}

impl<'a> FitData<'a> {
    pub fn from_series(series: &'a FactorSeries) -> Self {
        FitData { t: series.days(), ln_p: series.ln_p(), zeta: series.zeta() }
    }

    fn check_tc(&self, nl: &NonlinearParams) -> Result<()> {
        let t2 = *self.t.last().expect("non-empty series") as f64;
        if nl.tc > t2 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "critical time {} must lie beyond the window end {t2}",
                nl.tc
            )))
        }
    }
}

/// Slave the linear parameters and accumulate the residual sum of squares in
/// one pass over the window.
pub(crate) fn slave_and_rss(
    data: FitData<'_>,
    nl: &NonlinearParams,
    kind: ModelKind,
) -> Result<(f64, LinearParams)> {
    data.check_tc(nl)?;
    let n = data.t.len();
    if n < kind.n_linear() {
        return Err(Error::Validation(format!(
            "{n} observations cannot identify {} linear parameters",
            kind.n_linear()
        )));
    }

    // regressor order: zipf (zeta, 1, f, g); jls (1, f, g)
    let zipf = kind == ModelKind::Zipf;
    let dim = kind.n_linear();
    let mut a = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    let mut fs = Vec::with_capacity(n);
    let mut gs = Vec::with_capacity(n);
    for i in 0..n {
        let u = nl.tc - data.t[i] as f64;
        let (f, g) = basis_raw(u, nl.m, nl.omega, nl.phi);
        fs.push(f);
        gs.push(g);
        let y = data.ln_p[i];
        let x: [f64; 4] = if zipf { [data.zeta[i], 1.0, f, g] } else { [1.0, f, g, 0.0] };
        for r in 0..dim {
            for c in r..dim {
                a[r][c] += x[r] * x[c];
            }
            rhs[r] += x[r] * y;
        }
    }
    for r in 0..dim {
        for c in 0..r {
            a[r][c] = a[c][r];
        }
    }

    let sol = solve_normal_system(a, rhs, dim)?;
    let lin = if zipf {
        LinearParams { gamma: sol[0], a: sol[1], b: sol[2], c: sol[3] }
    } else {
        LinearParams { gamma: 0.0, a: sol[0], b: sol[1], c: sol[2] }
    };

    let mut rss = 0.0;
    for i in 0..n {
        let model = lin.gamma * data.zeta[i] + lin.a + lin.b * fs[i] + lin.c * gs[i];
        let r = data.ln_p[i] - model;
        rss += r * r;
    }
    Ok((rss, lin))
}

/// Residual vector `ln p(t) - model(t)` for a given parameter set.
pub(crate) fn residual_vector(
    data: FitData<'_>,
    nl: &NonlinearParams,
    lin: &LinearParams,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.t.len());
    for i in 0..data.t.len() {
        let u = nl.tc - data.t[i] as f64;
        let (f, g) = basis_raw(u, nl.m, nl.omega, nl.phi);
        let model = lin.gamma * data.zeta[i] + lin.a + lin.b * f + lin.c * g;
        out.push(data.ln_p[i] - model);
    }
    out
}

/// Least-squares-optimal linear parameters for fixed nonlinear ones.
///
/// Errors with [`Error::RankDeficient`] when the regressors are collinear
/// (for instance a zeta column that is identically zero in zipf mode).
pub fn slave_linear(
    series: &FactorSeries,
    nl: &NonlinearParams,
    kind: ModelKind,
) -> Result<LinearParams> {
    slave_and_rss(FitData::from_series(series), nl, kind).map(|(_, lin)| lin)
}

/// Residual sum of squares after slaving, the objective of the nonlinear
/// search, together with the slaved linear parameters.
pub fn cost(
    series: &FactorSeries,
    nl: &NonlinearParams,
    kind: ModelKind,
) -> Result<(f64, LinearParams)> {
    slave_and_rss(FitData::from_series(series), nl, kind)
}
