//! Nested-model inference: the Wilks likelihood-ratio test of the plain JLS
//! model against the Zipf-augmented one, its chi-squared reference
//! distribution, and summary statistics for scan aggregation.
//!
//! With maximum-likelihood variance plug-ins (RSS/T per model) the two
//! normalized quadratic terms of the log-likelihood ratio each equal T and
//! cancel, so the statistic reduces to `W = T * ln(RSS_jls / RSS_zipf)`. The
//! augmented model adds one parameter (the factor loading), hence one degree
//! of freedom; the same reference distribution is used for the pooled
//! best-fits test, which is the convention followed here.

pub mod scan;

pub use scan::{derive_seed, scan_windows, ScanFailure, ScanResult};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::FitEnsemble;

/// Diagnostic attached to a Wilks report for degenerate inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WilksWarning {
    /// The augmented model fits exactly (RSS = 0); the p-value underflows to 0.
    ExactFit,
    /// RSS_zipf exceeded RSS_jls, which cannot happen at true nested optima;
    /// the statistic was clamped at 0.
    NegativeClamped,
}

/// Wilks log-likelihood-ratio test report.
///
/// Serializes as `{W, dof, p_value, T, reject_at_5pct}`. A non-finite `W`
/// (exact-fit corner) serializes as JSON null.
#[derive(Debug, Clone, Serialize)]
pub struct WilksReport {
    #[serde(rename = "W")]
    pub w: f64,
    pub dof: u32,
    pub p_value: f64,
    #[serde(rename = "T")]
    pub sample_size: usize,
    pub reject_at_5pct: bool,
    #[serde(skip)]
    pub warning: Option<WilksWarning>,
}

/// Survival function of the chi-squared distribution with one degree of
/// freedom, via `erfc(sqrt(w/2))`.
pub fn sf_chi2_1(w: f64) -> Result<f64> {
    if w < 0.0 || w.is_nan() {
        return Err(Error::Domain(format!("chi-squared statistic must be non-negative, got {w}")));
    }
    Ok(libm::erfc((w / 2.0).sqrt()))
}

/// Wilks test from the residual vectors of the two nested fits.
///
/// Both vectors must have the same length T >= 10. An exactly-fitting
/// augmented model yields p = 0 with an [`WilksWarning::ExactFit`] warning; a
/// ratio below 1 (optimizer failure) clamps W at 0 with a
/// [`WilksWarning::NegativeClamped`] diagnostic.
pub fn wilks_statistic(res_jls: &[f64], res_zipf: &[f64]) -> Result<WilksReport> {
    if res_jls.len() != res_zipf.len() {
        return Err(Error::Validation(format!(
            "residual vectors differ in length: {} vs {}",
            res_jls.len(),
            res_zipf.len()
        )));
    }
    let t = res_jls.len();
    if t < 10 {
        return Err(Error::Validation(format!(
            "Wilks test needs at least 10 residuals, got {t}"
        )));
    }
    let rss_jls: f64 = res_jls.iter().map(|r| r * r).sum();
    let rss_zipf: f64 = res_zipf.iter().map(|r| r * r).sum();

    let (w, p, warning) = if rss_zipf == 0.0 {
        if rss_jls == 0.0 {
            (0.0, 1.0, Some(WilksWarning::ExactFit))
        } else {
            (f64::INFINITY, 0.0, Some(WilksWarning::ExactFit))
        }
    } else if rss_zipf > rss_jls {
        (0.0, 1.0, Some(WilksWarning::NegativeClamped))
    } else {
        let w = t as f64 * (rss_jls / rss_zipf).ln();
        (w, sf_chi2_1(w)?, None)
    };

    Ok(WilksReport {
        w,
        dof: 1,
        p_value: p,
        sample_size: t,
        reject_at_5pct: p < 0.05,
        warning,
    })
}

/// Pooled Wilks test over two best-fit ensembles of the same window: the
/// retained fits' residuals are concatenated per model (sample size
/// `keep_best * T`) and tested as one large sample.
///
/// The reference distribution keeps one degree of freedom even though the
/// pooled sample mixes several local optima per model. That convention raises
/// power but makes the pooled test aggressive when the single-fit evidence is
/// weak; read the two reports together.
pub fn pooled_wilks(ens_jls: &FitEnsemble, ens_zipf: &FitEnsemble) -> Result<WilksReport> {
    if (ens_jls.t1, ens_jls.t2) != (ens_zipf.t1, ens_zipf.t2) {
        return Err(Error::Validation(format!(
            "ensembles cover different windows: [{}, {}] vs [{}, {}]",
            ens_jls.t1, ens_jls.t2, ens_zipf.t1, ens_zipf.t2
        )));
    }
    if ens_jls.results.len() != ens_zipf.results.len() {
        return Err(Error::Validation(format!(
            "ensembles keep different fit counts: {} vs {}",
            ens_jls.results.len(),
            ens_zipf.results.len()
        )));
    }
    wilks_statistic(&ens_jls.pooled_residuals(), &ens_zipf.pooled_residuals())
}

/// Mean, median and sample standard deviation of a value set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

/// Arithmetic mean, median (average of the central pair for even counts) and
/// sample standard deviation (divisor n-1; 0 for a single value).
pub fn aggregate_stats(values: &[f64]) -> Result<SummaryStats> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Validation("cannot aggregate an empty value set".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let std = if n == 1 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(SummaryStats { mean, median, std })
}
