//! Calibration of log-periodic power-law bubble models augmented with a Zipf
//! diversification-risk factor.
//!
//! The library covers the full pipeline:
//!
//! * [`market`] — constituent capitalization panels, capitalization-weighted
//!   and equal-weighted index construction, and the integrated Zipf factor
//!   `zeta(t) = ln p(t) - ln p_e(t)`;
//! * [`model`] — the augmented log-price formula, the crash-hazard proxy and
//!   the bubble-qualification conditions;
//! * [`fit`] — nonlinear calibration with analytic slaving of the linear
//!   parameters, taboo-style multi-start search, Levenberg-Marquardt
//!   refinement and best-fit ensembles;
//! * [`stats`] — the Wilks nested-model test (plain JLS vs augmented model),
//!   its chi-squared reference distribution, and the multi-window scan
//!   protocol for critical-time forecasts;
//! * [`synth`] — seeded generators for ground-truth series and panels;
//! * [`cli`] — the command-line front end (`lppl-zipf`).
//!
//! Every stage is deterministic given its inputs and seed. See the crate
//! examples for end-to-end usage of each capability.

pub mod cli;
pub mod error;
pub mod fit;
pub mod market;
pub mod model;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use fit::{cost, fit_window, search_bounds, slave_linear, FitConfig, FitEnsemble, FitResult,
    FitWindow, ModelKind};
pub use market::{build_factor_series, equal_weighted_price, index_price, ConstituentPanel,
    FactorSeries};
pub use model::{basis_functions, hazard_proxy, lppl_log_price, qualify, LinearParams,
    NonlinearParams, QualificationFlags};
pub use stats::{aggregate_stats, pooled_wilks, scan_windows, sf_chi2_1, wilks_statistic,
    ScanResult, SummaryStats, WilksReport};
