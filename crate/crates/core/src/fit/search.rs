//! Taboo-flavored multi-start search over the nonlinear box.
//!
//! Two phases share one evaluation budget:
//!
//! * Diversification: uniform random starts seed greedy local walks in
//!   unit-box coordinates. Accepted minima become taboo balls that later
//!   starts (and moves) must avoid, which spreads the walks over distinct
//!   basins. Proposals are Gaussian with base scale 0.05, shrinking by 0.7 on
//!   rejection and growing by 1.3 (capped at the base) on acceptance.
//! * Intensification: a reserved slice of the budget (one sixth) polishes the
//!   best walk minima with a derivative-free simplex descent, which tracks
//!   the curved valleys of the cost surface far better than isotropic
//!   sampling.
//!
//! The result is a candidate list covering several basins whose best entries
//! are already deep, ready for Levenberg-Marquardt refinement. Everything is
//! a pure function of the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fit::bounds::SearchBounds;
use crate::fit::config::FitConfig;
use crate::fit::slave::{slave_and_rss, FitData, ModelKind};
use crate::market::FactorSeries;
use crate::model::NonlinearParams;

/// Base standard deviation of the local Gaussian proposals, in unit-box
/// coordinates.
const BASE_STEP: f64 = 0.05;
const STEP_SHRINK: f64 = 0.7;
const STEP_GROW: f64 = 1.3;
const MIN_STEP: f64 = 1e-9;
const MAX_START_TRIES: usize = 20;
/// Evaluation cap of one simplex polish.
const POLISH_CAP: usize = 400;

fn in_taboo(minima: &[(f64, [f64; 4])], x: &[f64; 4], radius: f64) -> bool {
    minima.iter().any(|(_, m)| (0..4).all(|k| (m[k] - x[k]).abs() < radius))
}

/// Nelder-Mead descent in unit coordinates, budget-capped. Returns the best
/// vertex and its cost, spending at most `cap` evaluations.
fn simplex_polish(
    eval: &mut dyn FnMut(&[f64; 4]) -> f64,
    start: [f64; 4],
    start_cost: f64,
    cap: usize,
) -> ((f64, [f64; 4]), usize) {
    let mut used = 0usize;
    let mut simplex: Vec<([f64; 4], f64)> = vec![(start, start_cost)];
    for k in 0..4 {
        if used >= cap {
            break;
        }
        let mut v = start;
        v[k] = if v[k] + BASE_STEP <= 1.0 { v[k] + BASE_STEP } else { v[k] - BASE_STEP };
        let c = eval(&v);
        used += 1;
        simplex.push((v, c));
    }
    while simplex.len() < 5 {
        simplex.push((start, start_cost));
    }

    while used < cap {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[4];
        if !(worst.1 - best).is_finite() || (worst.1 - best) <= 1e-16 * best.max(1e-300) {
            break;
        }
        let centroid: [f64; 4] =
            std::array::from_fn(|k| simplex[..4].iter().map(|(v, _)| v[k]).sum::<f64>() / 4.0);
        let refl: [f64; 4] =
            std::array::from_fn(|k| (2.0 * centroid[k] - worst.0[k]).clamp(0.0, 1.0));
        let cr = eval(&refl);
        used += 1;
        if cr < best {
            let exp: [f64; 4] =
                std::array::from_fn(|k| (3.0 * centroid[k] - 2.0 * worst.0[k]).clamp(0.0, 1.0));
            if used < cap {
                let ce = eval(&exp);
                used += 1;
                simplex[4] = if ce < cr { (exp, ce) } else { (refl, cr) };
            } else {
                simplex[4] = (refl, cr);
            }
        } else if cr < simplex[3].1 {
            simplex[4] = (refl, cr);
        } else {
            let contr: [f64; 4] =
                std::array::from_fn(|k| (0.5 * (centroid[k] + worst.0[k])).clamp(0.0, 1.0));
            let cc = eval(&contr);
            used += 1;
            if cc < worst.1 {
                simplex[4] = (contr, cc);
            } else {
                // shrink toward the best vertex
                let anchor = simplex[0].0;
                for i in 1..5 {
                    if used >= cap {
                        break;
                    }
                    let v: [f64; 4] = std::array::from_fn(|k| {
                        (0.5 * (anchor[k] + simplex[i].0[k])).clamp(0.0, 1.0)
                    });
                    let c = eval(&v);
                    used += 1;
                    simplex[i] = (v, c);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    ((simplex[0].1, simplex[0].0), used)
}

/// Candidate nonlinear points with low slaved cost, sorted ascending by cost.
///
/// `budget` caps the number of cost evaluations (at least 100); at least 10
/// starts are always attempted, each contributing the best point of its walk.
/// Rank-deficient evaluations count as infinite cost. Deterministic given the
/// seed.
pub fn heuristic_search(
    series: &FactorSeries,
    bounds: &SearchBounds,
    budget: usize,
    seed: u64,
    kind: ModelKind,
    cfg: &FitConfig,
) -> Vec<NonlinearParams> {
    assert!(budget >= 100, "heuristic_search needs a budget of at least 100 evaluations");
    let data = FitData::from_series(series);
    let mut eval = |u: &[f64; 4]| -> f64 {
        let nl = bounds.from_unit(*u);
        match slave_and_rss(data, &nl, kind) {
            Ok((rss, _)) if rss.is_finite() => rss,
            _ => f64::INFINITY,
        }
    };

    // budget split: walks are capped at n_starts and at half the budget, and
    // everything they do not consume goes to the polish phase; tight budgets
    // shrink the walks so that ten starts always fit
    let per_start_cfg = cfg.local_moves + 1;
    let (n_starts, local_moves, reserve) = if budget / per_start_cfg >= 12 {
        let starts = ((budget / 2) / per_start_cfg).clamp(10, cfg.n_starts.max(10));
        let reserve = budget.saturating_sub(starts * per_start_cfg);
        (starts, cfg.local_moves, reserve)
    } else {
        let moves = (budget / 10).saturating_sub(1).max(1);
        (10usize, moves, 0usize)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut minima: Vec<(f64, [f64; 4])> = Vec::with_capacity(n_starts);
    let mut evals = 0usize;
    let walk_budget = budget - reserve;

    for _ in 0..n_starts {
        if evals >= walk_budget {
            break;
        }
        let mut x = [0.0f64; 4];
        for _ in 0..MAX_START_TRIES {
            x = std::array::from_fn(|_| rng.random::<f64>());
            if !in_taboo(&minima, &x, cfg.taboo_radius) {
                break;
            }
        }
        let mut best = eval(&x);
        evals += 1;

        let mut step = BASE_STEP;
        for _ in 0..local_moves {
            if evals >= walk_budget {
                break;
            }
            let y: [f64; 4] = std::array::from_fn(|k| {
                let dz: f64 = rng.sample(StandardNormal);
                (x[k] + step * dz).clamp(0.0, 1.0)
            });
            if in_taboo(&minima, &y, cfg.taboo_radius) {
                step = (step * STEP_SHRINK).max(MIN_STEP);
                continue;
            }
            let c = eval(&y);
            evals += 1;
            if c < best {
                x = y;
                best = c;
                step = (step * STEP_GROW).min(BASE_STEP);
            } else {
                step = (step * STEP_SHRINK).max(MIN_STEP);
            }
        }
        minima.push((best, x));
    }

    // intensification: polish the best minima with the remaining budget
    let mut remaining = budget.saturating_sub(evals);
    if remaining >= 60 && !minima.is_empty() {
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut idx = 0usize;
        while remaining >= 60 && idx < minima.len() {
            let (c0, x0) = minima[idx];
            if !c0.is_finite() {
                break;
            }
            let cap = remaining.min(POLISH_CAP);
            let ((c, x), used) = simplex_polish(&mut eval, x0, c0, cap);
            remaining = remaining.saturating_sub(used.max(1));
            if c < c0 {
                minima[idx] = (c, x);
            }
            idx += 1;
        }
    }

    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.into_iter().map(|(_, u)| bounds.from_unit(u)).collect()
}
