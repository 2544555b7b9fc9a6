//! The Zipf-augmented log-periodic power-law model.
//!
//! Expected log-price up to the critical time `tc`:
//!
//! ```text
//! E[ln p(t)] = gamma * zeta(t) + A + B*(tc-t)^m + C*(tc-t)^m * cos(omega*ln(tc-t) - phi)
//! ```
//!
//! `zeta` is the integrated Zipf factor (difference between the log-prices of the
//! capitalization-weighted and equal-weighted portfolios, zero at the day before
//! the fit window). Setting `gamma = 0` recovers the plain JLS model.
//!
//! All functions here are pure; evaluation at `t >= tc` is a domain error, not an
//! extrapolation: the formula describes the price only up to the end of the bubble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four slow search coordinates of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearParams {
    /// Critical time, as a real-valued trading-day index.
    pub tc: f64,
    /// Power-law exponent.
    pub m: f64,
    /// Log-angular frequency of the oscillations.
    pub omega: f64,
    /// Phase, in radians.
    pub phi: f64,
}

/// The four parameters slaved analytically to the nonlinear ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    /// Loading on the integrated Zipf factor (0 in the plain JLS model).
    pub gamma: f64,
    /// Log-price level at the critical time.
    pub a: f64,
    /// Power-law amplitude.
    pub b: f64,
    /// Log-periodic amplitude.
    pub c: f64,
}

/// Flat serialization record for a full parameter set.
///
/// Round-trips through JSON at 17 significant digits (serde uses the shortest
/// representation that parses back to the same value).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamRecord {
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
    pub phi: f64,
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl From<(NonlinearParams, LinearParams)> for ParamRecord {
    fn from((nl, lin): (NonlinearParams, LinearParams)) -> Self {
        ParamRecord {
            tc: nl.tc,
            m: nl.m,
            omega: nl.omega,
            phi: nl.phi,
            gamma: lin.gamma,
            a: lin.a,
            b: lin.b,
            c: lin.c,
        }
    }
}

impl From<ParamRecord> for (NonlinearParams, LinearParams) {
    fn from(r: ParamRecord) -> Self {
        (
            NonlinearParams { tc: r.tc, m: r.m, omega: r.omega, phi: r.phi },
            LinearParams { gamma: r.gamma, a: r.a, b: r.b, c: r.c },
        )
    }
}

/// Bubble-qualification conditions evaluated on a fitted parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualificationFlags {
    /// 0 < m < 1: the hazard rate accelerates while the price stays finite.
    pub m_in_range: bool,
    /// B < 0: super-exponential growth.
    pub b_negative: bool,
    /// The hazard-rate proxy is non-negative for all t, i.e. `hazard_floor >= 0`.
    pub hazard_nonneg: bool,
    /// omega <= 20; higher-frequency fits are noise artifacts.
    pub omega_ok: bool,
}

impl QualificationFlags {
    /// Conjunction of all four conditions.
    pub fn is_bubble(&self) -> bool {
        self.m_in_range && self.b_negative && self.hazard_nonneg && self.omega_ok
    }
}

#[inline]
fn time_to_tc(t: f64, nl: &NonlinearParams) -> Result<f64> {
    let u = nl.tc - t;
    if u > 0.0 {
        Ok(u)
    } else {
        Err(Error::Domain(format!(
            "t = {t} is not before the critical time tc = {}",
            nl.tc
        )))
    }
}

/// Power-law and log-periodic basis values at `u = tc - t > 0`.
///
/// `(tc-t)^m` is computed as `exp(m * ln(tc-t))`.
#[inline]
pub(crate) fn basis_raw(u: f64, m: f64, omega: f64, phi: f64) -> (f64, f64) {
    let ln_u = u.ln();
    let f = (m * ln_u).exp();
    let g = f * (omega * ln_u - phi).cos();
    (f, g)
}

/// The two nonlinear basis functions consumed by the linear slaving system:
/// `f(t) = (tc-t)^m` and `g(t) = (tc-t)^m * cos(omega*ln(tc-t) - phi)`.
pub fn basis_functions(t: f64, nl: &NonlinearParams) -> Result<(f64, f64)> {
    let u = time_to_tc(t, nl)?;
    Ok(basis_raw(u, nl.m, nl.omega, nl.phi))
}

/// Expected log-price at `t < tc` given the integrated Zipf factor value `zeta_t`.
pub fn lppl_log_price(
    t: f64,
    nl: &NonlinearParams,
    lin: &LinearParams,
    zeta_t: f64,
) -> Result<f64> {
    let (f, g) = basis_functions(t, nl)?;
    Ok(lin.gamma * zeta_t + lin.a + lin.b * f + lin.c * g)
}

/// Crash hazard rate scaled by the (unidentifiable) crash amplitude.
///
/// Equals the time derivative of the deterministic part of the log-price formula
/// (the Zipf term excluded):
///
/// ```text
/// (tc-t)^(m-1) * [-B*m - C*m*cos(omega*ln(tc-t) - phi) + C*omega*sin(omega*ln(tc-t) - phi)]
/// ```
///
/// The absolute hazard rate is not identifiable from price data, so only this
/// scaled proxy is exposed.
pub fn hazard_proxy(t: f64, nl: &NonlinearParams, lin: &LinearParams) -> Result<f64> {
    let u = time_to_tc(t, nl)?;
    let ln_u = u.ln();
    let theta = nl.omega * ln_u - nl.phi;
    let prefactor = ((nl.m - 1.0) * ln_u).exp();
    Ok(prefactor
        * (-lin.b * nl.m - lin.c * nl.m * theta.cos() + lin.c * nl.omega * theta.sin()))
}

/// Infimum over t of the bracketed part of [`hazard_proxy`]:
/// `b = -B*m - |C| * sqrt(m^2 + omega^2)`.
///
/// The hazard proxy is non-negative for all `t < tc` exactly when this is >= 0.
pub fn hazard_floor(nl: &NonlinearParams, lin: &LinearParams) -> f64 {
    -lin.b * nl.m - lin.c.abs() * (nl.m * nl.m + nl.omega * nl.omega).sqrt()
}

/// Evaluate the bubble-qualification conditions.
pub fn qualify(nl: &NonlinearParams, lin: &LinearParams) -> QualificationFlags {
    QualificationFlags {
        m_in_range: nl.m > 0.0 && nl.m < 1.0,
        b_negative: lin.b < 0.0,
        hazard_nonneg: hazard_floor(nl, lin) >= 0.0,
        omega_ok: nl.omega <= 20.0,
    }
}
