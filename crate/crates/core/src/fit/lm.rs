//! Levenberg-Marquardt refinement of the nonlinear parameters.
//!
//! The residual vector is minimized over (tc, m, omega, phi) with the linear
//! parameters re-slaved at every evaluation. Box constraints are handled by a
//! smooth logistic bijection onto the box, so iterates are always feasible and
//! no projection is needed at the boundary; a parameter pushed toward a bound
//! saturates smoothly instead. The Jacobian is a central difference over the
//! four transformed coordinates. Damping starts at 1e-3 and adapts by factors
//! of 10.

use crate::error::Result;
use crate::fit::bounds::SearchBounds;
use crate::fit::config::FitConfig;
use crate::fit::slave::{residual_vector, slave_and_rss, FitData, ModelKind};
use crate::fit::FitResult;
use crate::market::FactorSeries;
use crate::model::{qualify, NonlinearParams};

const DAMP_INIT: f64 = 1e-3;
const DAMP_MIN: f64 = 1e-14;
const DAMP_MAX: f64 = 1e14;
/// Central-difference step in transformed coordinates.
const FD_STEP: f64 = 4e-5;
/// Transformed coordinates are capped so the logistic stays invertible in f64.
const S_CAP: f64 = 36.0;

#[inline]
fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

#[inline]
fn logit(u: f64) -> f64 {
    let u = u.clamp(1e-15, 1.0 - 1e-15);
    (u / (1.0 - u)).ln().clamp(-S_CAP, S_CAP)
}

fn params_at(bounds: &SearchBounds, s: &[f64; 4]) -> NonlinearParams {
    bounds.from_unit(std::array::from_fn(|k| logistic(s[k])))
}

/// Solve the 4x4 damped normal equations (J'J + lambda diag(J'J)) d = -g.
fn lm_step(jtj: &[[f64; 4]; 4], grad: &[f64; 4], lambda: f64) -> Option<[f64; 4]> {
    let mut a = *jtj;
    let mut scale = 0.0f64;
    for k in 0..4 {
        scale = scale.max(jtj[k][k].abs());
    }
    if !(scale > 0.0) {
        return None;
    }
    for k in 0..4 {
        // floor keeps a flat (saturated) coordinate from making the system singular
        a[k][k] += lambda * jtj[k][k].max(1e-12 * scale);
    }
    let mut b = [-grad[0], -grad[1], -grad[2], -grad[3]];
    // elimination with partial pivoting
    let mut idx = [0usize, 1, 2, 3];
    for k in 0..4 {
        let mut piv = k;
        for r in k + 1..4 {
            if a[idx[r]][k].abs() > a[idx[piv]][k].abs() {
                piv = r;
            }
        }
        idx.swap(k, piv);
        let akk = a[idx[k]][k];
        if akk.abs() < 1e-300 {
            return None;
        }
        for r in k + 1..4 {
            let f = a[idx[r]][k] / akk;
            for c in k..4 {
                a[idx[r]][c] -= f * a[idx[k]][c];
            }
            b[idx[r]] -= f * b[idx[k]];
        }
    }
    let mut d = [0.0f64; 4];
    for k in (0..4).rev() {
        let mut s = b[idx[k]];
        for c in k + 1..4 {
            s -= a[idx[k]][c] * d[c];
        }
        d[k] = s / a[idx[k]][k];
    }
    Some(d)
}

/// Refine `start` by Levenberg-Marquardt, returning the full fit at the best
/// iterate. `converged` is false when the iteration cap was the only reason to
/// stop. Rank deficiency at a defining iterate propagates as an error; a
/// deficient trial point is treated as a rejected step.
pub fn refine(
    series: &FactorSeries,
    start: &NonlinearParams,
    bounds: &SearchBounds,
    kind: ModelKind,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let data = FitData::from_series(series);
    let unit0 = bounds.to_unit(start);
    let mut s: [f64; 4] = std::array::from_fn(|k| logit(unit0[k]));

    let (mut rss, mut lin) = slave_and_rss(data, &params_at(bounds, &s), kind)?;
    let mut lambda = DAMP_INIT;
    let mut converged = rss == 0.0;

    if !converged {
        'outer: for _iter in 0..cfg.lm_max_iter {
            // Jacobian of the residual vector by central differences, with
            // linear parameters re-slaved at every evaluation.
            let n = data.t.len();
            let mut jac = vec![[0.0f64; 4]; n];
            for k in 0..4 {
                let mut sp = s;
                sp[k] = (s[k] + FD_STEP).clamp(-S_CAP, S_CAP);
                let mut sm = s;
                sm[k] = (s[k] - FD_STEP).clamp(-S_CAP, S_CAP);
                let span = sp[k] - sm[k];
                let (_, lin_p) = slave_and_rss(data, &params_at(bounds, &sp), kind)?;
                let (_, lin_m) = slave_and_rss(data, &params_at(bounds, &sm), kind)?;
                let rp = residual_vector(data, &params_at(bounds, &sp), &lin_p);
                let rm = residual_vector(data, &params_at(bounds, &sm), &lin_m);
                for i in 0..n {
                    jac[i][k] = (rp[i] - rm[i]) / span;
                }
            }
            let res = residual_vector(data, &params_at(bounds, &s), &lin);
            let mut jtj = [[0.0f64; 4]; 4];
            let mut grad = [0.0f64; 4];
            for i in 0..n {
                for r in 0..4 {
                    grad[r] += jac[i][r] * res[i];
                    for c in r..4 {
                        jtj[r][c] += jac[i][r] * jac[i][c];
                    }
                }
            }
            for r in 0..4 {
                for c in 0..r {
                    jtj[r][c] = jtj[c][r];
                }
            }

            // one accept/reject cycle per damping value until a step is taken
            loop {
                let Some(delta) = lm_step(&jtj, &grad, lambda) else {
                    converged = true;
                    break 'outer;
                };
                let trial: [f64; 4] =
                    std::array::from_fn(|k| (s[k] + delta[k]).clamp(-S_CAP, S_CAP));
                match slave_and_rss(data, &params_at(bounds, &trial), kind) {
                    Ok((rss_t, lin_t)) if rss_t.is_finite() && rss_t < rss => {
                        let step_unit = (0..4)
                            .map(|k| (logistic(trial[k]) - logistic(s[k])).abs())
                            .fold(0.0f64, f64::max);
                        let rel_gain = (rss - rss_t) / rss;
                        s = trial;
                        rss = rss_t;
                        lin = lin_t;
                        lambda = (lambda / 10.0).max(DAMP_MIN);
                        if rss == 0.0 || rel_gain < cfg.lm_tol || step_unit < cfg.lm_tol {
                            converged = true;
                            break 'outer;
                        }
                        break;
                    }
                    _ => {
                        lambda *= 10.0;
                        if lambda > DAMP_MAX {
                            // no downhill step at any damping: numerically at a minimum
                            converged = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let (nl, lin) = canonical_phase(params_at(bounds, &s), lin);
    let residuals = residual_vector(data, &nl, &lin);
    // the canonical form is the same function up to rounding; keep rss exact
    let rss = residuals.iter().map(|r| r * r).sum();
    Ok(FitResult {
        nl,
        lin,
        rss,
        residuals,
        flags: qualify(&nl, &lin),
        kind,
        converged,
    })
}

/// The model is exactly invariant under (C, phi) -> (-C, phi + pi); fits are
/// reported in the canonical representation with C >= 0.
fn canonical_phase(
    mut nl: NonlinearParams,
    mut lin: crate::model::LinearParams,
) -> (NonlinearParams, crate::model::LinearParams) {
    if lin.c < 0.0 {
        lin.c = -lin.c;
        let two_pi = 2.0 * std::f64::consts::PI;
        nl.phi = (nl.phi + std::f64::consts::PI).rem_euclid(two_pi).min(two_pi - 1e-5);
    }
    (nl, lin)
}
