//! Calibration of the nested bubble models on a factor-series window.
//!
//! The eight model parameters split into four linear ones, eliminated
//! analytically at every nonlinear point ([`slave_linear`]), and four
//! nonlinear ones searched by a taboo-flavored multi-start heuristic
//! ([`heuristic_search`]) whose candidates are polished by Levenberg-Marquardt
//! ([`refine`]). A window fit keeps the best distinct local optima
//! ([`fit_window`]).

mod bounds;
mod config;
mod lm;
mod search;
mod slave;

pub use bounds::{search_bounds, SearchBounds};
pub use config::{FitConfig, CONFIG_ENV};
pub use lm::refine;
pub use search::heuristic_search;
pub use slave::{cost, slave_linear, ModelKind};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::FactorSeries;
use crate::model::{LinearParams, NonlinearParams, QualificationFlags};

/// Fits with omega above this are dropped from ensembles as noise artifacts.
pub const OMEGA_KEEP_MAX: f64 = 20.0;

/// Two fits closer than this in every coordinate are the same basin; the
/// lower-RSS one is kept.
pub const DUP_TC: f64 = 1.0;
pub const DUP_M: f64 = 0.01;
pub const DUP_OMEGA: f64 = 0.1;

/// A validated fit window: the factor series restricted to `[t1, t2]` with the
/// Zipf factor renormalized to the day before `t1`.
#[derive(Debug, Clone)]
pub struct FitWindow {
    t1: i64,
    t2: i64,
    series: FactorSeries,
}

impl FitWindow {
    /// Restrict `series` to `[t1, t2]`, refusing windows shorter than
    /// `min_window` trading days.
    pub fn new(series: &FactorSeries, t1: i64, t2: i64, min_window: i64) -> Result<Self> {
        let len = t2 - t1;
        if len < min_window {
            return Err(Error::WindowTooShort { t1, t2, len, min: min_window });
        }
        Ok(FitWindow { t1, t2, series: series.restrict(t1, t2)? })
    }

    pub fn t1(&self) -> i64 {
        self.t1
    }

    pub fn t2(&self) -> i64 {
        self.t2
    }

    pub fn series(&self) -> &FactorSeries {
        &self.series
    }

    /// Number of fitted observations.
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// One local optimum of a window fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub nl: NonlinearParams,
    pub lin: LinearParams,
    pub rss: f64,
    pub residuals: Vec<f64>,
    pub flags: QualificationFlags,
    pub kind: ModelKind,
    pub converged: bool,
}

impl FitResult {
    pub fn is_duplicate_of(&self, other: &FitResult) -> bool {
        (self.nl.tc - other.nl.tc).abs() < DUP_TC
            && (self.nl.m - other.nl.m).abs() < DUP_M
            && (self.nl.omega - other.nl.omega).abs() < DUP_OMEGA
    }

    /// Flat serialization record (residuals omitted).
    pub fn record(&self) -> FitRecord {
        FitRecord {
            model: self.kind,
            tc: self.nl.tc,
            m: self.nl.m,
            omega: self.nl.omega,
            phi: self.nl.phi,
            gamma: self.lin.gamma,
            a: self.lin.a,
            b: self.lin.b,
            c: self.lin.c,
            rss: self.rss,
            converged: self.converged,
            qualified: self.flags.is_bubble(),
            flags: self.flags,
        }
    }
}

/// JSON record for one fit: the eight parameters, the residual sum of squares,
/// qualification flags and convergence status.
#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub model: ModelKind,
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
    pub rss: f64,
    pub converged: bool,
    pub qualified: bool,
    pub flags: QualificationFlags,
}

/// The retained fits of one window for one model, sorted ascending by RSS and
/// pairwise distinct under the separation rule.
#[derive(Debug, Clone)]
pub struct FitEnsemble {
    pub t1: i64,
    pub t2: i64,
    pub kind: ModelKind,
    pub results: Vec<FitResult>,
}

impl FitEnsemble {
    pub fn best(&self) -> &FitResult {
        &self.results[0]
    }

    /// Residuals of all retained fits concatenated in rank order.
    pub fn pooled_residuals(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.results.iter().map(|r| r.residuals.len()).sum());
        for r in &self.results {
            out.extend_from_slice(&r.residuals);
        }
        out
    }
}

/// Calibrate one model on one window: heuristic search, refinement of every
/// candidate, separation-rule deduplication, and retention of the
/// `keep_best` lowest-RSS fits. High-frequency fits (omega > 20) are dropped;
/// non-qualified fits are retained but flagged.
pub fn fit_window(window: &FitWindow, cfg: &FitConfig, kind: ModelKind) -> Result<FitEnsemble> {
    let bounds = search_bounds(window.t1, window.t2);
    let candidates = heuristic_search(
        window.series(),
        &bounds,
        cfg.search_budget(),
        cfg.seed,
        kind,
        cfg,
    );

    let mut fits: Vec<FitResult> = Vec::new();
    for cand in &candidates {
        match refine(window.series(), cand, &bounds, kind, cfg) {
            Ok(fit) => {
                if fit.nl.omega <= OMEGA_KEEP_MAX {
                    fits.push(fit);
                }
            }
            Err(Error::RankDeficient(_)) | Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if fits.is_empty() {
        return Err(Error::NoFit { t1: window.t1, t2: window.t2 });
    }

    fits.sort_by(|a, b| {
        a.rss
            .total_cmp(&b.rss)
            .then(a.nl.tc.total_cmp(&b.nl.tc))
            .then(a.nl.m.total_cmp(&b.nl.m))
            .then(a.nl.omega.total_cmp(&b.nl.omega))
            .then(a.nl.phi.total_cmp(&b.nl.phi))
    });

    let mut kept: Vec<FitResult> = Vec::with_capacity(cfg.keep_best);
    for fit in fits {
        if kept.len() >= cfg.keep_best {
            break;
        }
        if !kept.iter().any(|k| k.is_duplicate_of(&fit)) {
            kept.push(fit);
        }
    }

    Ok(FitEnsemble { t1: window.t1, t2: window.t2, kind, results: kept })
}
