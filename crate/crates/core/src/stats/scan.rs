//! Multi-window scan of the critical-time forecast.
//!
//! The base window `[t1, t2]` is shifted to `(t1 + i*step, t2 + j*step)` for
//! `i < n_t1`, `j < n_t2`, and every window is fitted with both models. With
//! the defaults (15 x 15 windows in steps of 3 days, 10 kept fits) a scan
//! yields 225 windows and 2250 kept fits per model, over which the critical
//! time and factor-loading statistics are aggregated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{fit_window, FitConfig, FitEnsemble, FitResult, FitWindow, ModelKind};
use crate::market::FactorSeries;
use crate::stats::{aggregate_stats, SummaryStats};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic per-task seed: the window offsets and a model tag are mixed
/// into the master seed through the splitmix64 finalizer, so results do not
/// depend on scheduling or thread count.
pub fn derive_seed(master: u64, i: usize, j: usize, kind: ModelKind) -> u64 {
    let tag: u64 = match kind {
        ModelKind::Jls => 1,
        ModelKind::Zipf => 2,
    };
    let mut z = master;
    z = splitmix64(z ^ (i as u64).wrapping_mul(0xA24BAED4963EE407));
    z = splitmix64(z ^ (j as u64).wrapping_mul(0x9FB21C651E98DF25));
    splitmix64(z ^ tag)
}

/// A window fit that failed, with the reason; excluded from aggregates.
#[derive(Debug, Clone)]
pub struct ScanFailure {
    pub t1: i64,
    pub t2: i64,
    pub kind: ModelKind,
    pub reason: String,
}

/// All ensembles of a window scan, in canonical (t1-offset, t2-offset, model)
/// order, plus the failures.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub base_t1: i64,
    pub base_t2: i64,
    pub n_t1: usize,
    pub n_t2: usize,
    pub step: i64,
    pub keep_best: usize,
    pub ensembles: Vec<FitEnsemble>,
    pub failures: Vec<ScanFailure>,
}

impl ScanResult {
    /// Every generated window, in canonical order.
    pub fn windows(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.n_t1 * self.n_t2);
        for i in 0..self.n_t1 {
            for j in 0..self.n_t2 {
                out.push((
                    self.base_t1 + (i as i64) * self.step,
                    self.base_t2 + (j as i64) * self.step,
                ));
            }
        }
        out
    }

    pub fn window_count(&self) -> usize {
        self.n_t1 * self.n_t2
    }

    /// Retained fits of one model across all windows, in canonical order.
    pub fn kept_fits(&self, kind: ModelKind) -> impl Iterator<Item = &FitResult> {
        self.ensembles
            .iter()
            .filter(move |e| e.kind == kind)
            .flat_map(|e| e.results.iter())
    }

    fn filtered<'a>(
        &'a self,
        kind: ModelKind,
        qualified_only: bool,
    ) -> impl Iterator<Item = &'a FitResult> {
        self.kept_fits(kind).filter(move |r| !qualified_only || r.flags.is_bubble())
    }

    /// Predicted critical times of all kept fits of one model.
    pub fn tc_values(&self, kind: ModelKind, qualified_only: bool) -> Vec<f64> {
        self.filtered(kind, qualified_only).map(|r| r.nl.tc).collect()
    }

    /// Factor loadings of all kept zipf fits.
    pub fn gamma_values(&self, qualified_only: bool) -> Vec<f64> {
        self.filtered(ModelKind::Zipf, qualified_only).map(|r| r.lin.gamma).collect()
    }

    pub fn tc_stats(&self, kind: ModelKind, qualified_only: bool) -> Result<SummaryStats> {
        aggregate_stats(&self.tc_values(kind, qualified_only))
    }

    pub fn gamma_stats(&self, qualified_only: bool) -> Result<SummaryStats> {
        aggregate_stats(&self.gamma_values(qualified_only))
    }
}

/// Fit every scan window with both models.
///
/// Per-window seeds derive from the master seed via [`derive_seed`]; windows
/// are independent tasks and may run on however many threads the ambient
/// rayon pool provides without changing any output bit. Individual window
/// failures are recorded and excluded, not fatal.
pub fn scan_windows(
    series: &FactorSeries,
    base_t1: i64,
    base_t2: i64,
    n_t1: usize,
    n_t2: usize,
    step: i64,
    cfg: &FitConfig,
) -> Result<ScanResult> {
    if n_t1 == 0 || n_t2 == 0 {
        return Err(Error::Validation("scan needs at least one window per axis".into()));
    }
    if step < 1 && (n_t1 > 1 || n_t2 > 1) {
        return Err(Error::Validation(format!("scan step must be at least 1 day, got {step}")));
    }
    // the shortest window pairs the largest t1 shift with the unshifted t2
    let shortest = (base_t2 - base_t1) - (n_t1 as i64 - 1) * step;
    if shortest < cfg.min_window {
        return Err(Error::WindowTooShort {
            t1: base_t1 + (n_t1 as i64 - 1) * step,
            t2: base_t2,
            len: shortest,
            min: cfg.min_window,
        });
    }
    let t2_max = base_t2 + (n_t2 as i64 - 1) * step;
    if base_t1 < series.t1() || t2_max > series.t2() {
        return Err(Error::Validation(format!(
            "scan needs factor data for days [{}, {t2_max}], series covers [{}, {}]",
            base_t1 - 1,
            series.t0(),
            series.t2()
        )));
    }

    let mut tasks = Vec::with_capacity(n_t1 * n_t2 * 2);
    for i in 0..n_t1 {
        for j in 0..n_t2 {
            for kind in [ModelKind::Jls, ModelKind::Zipf] {
                tasks.push((i, j, kind));
            }
        }
    }

    let outcomes: Vec<(i64, i64, ModelKind, Result<FitEnsemble>)> = tasks
        .par_iter()
        .map(|&(i, j, kind)| {
            let t1 = base_t1 + (i as i64) * step;
            let t2 = base_t2 + (j as i64) * step;
            let mut task_cfg = cfg.clone();
            task_cfg.seed = derive_seed(cfg.seed, i, j, kind);
            let run = FitWindow::new(series, t1, t2, cfg.min_window)
                .and_then(|w| fit_window(&w, &task_cfg, kind));
            (t1, t2, kind, run)
        })
        .collect();

    let mut ensembles = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (t1, t2, kind, run) in outcomes {
        match run {
            Ok(e) => ensembles.push(e),
            Err(err) => {
                failures.push(ScanFailure { t1, t2, kind, reason: err.to_string() })
            }
        }
    }

    Ok(ScanResult {
        base_t1,
        base_t2,
        n_t1,
        n_t2,
        step,
        keep_best: cfg.keep_best,
        ensembles,
        failures,
    })
}
