//! Calibration configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming a default config file for the CLI.
pub const CONFIG_ENV: &str = "LPPL_ZIPF_CONFIG";

/// Knobs of the heuristic search, the Levenberg-Marquardt refinement and the
/// ensemble bookkeeping. Loaded from a TOML key-value file; every key is
/// optional and falls back to the default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Uniform random starts of the heuristic search.
    pub n_starts: usize,
    /// Local proposal moves per start.
    pub local_moves: usize,
    /// Radius (normalized L-infinity) of the taboo balls around visited minima.
    pub taboo_radius: f64,
    /// Iteration cap of the Levenberg-Marquardt refinement.
    pub lm_max_iter: usize,
    /// Relative-improvement and normalized-step stopping tolerance.
    pub lm_tol: f64,
    /// Master RNG seed; everything downstream derives from it.
    pub seed: u64,
    /// Number of distinct fits retained per window.
    pub keep_best: usize,
    /// Minimum window length in trading days (t2 - t1).
    pub min_window: i64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_starts: 200,
            local_moves: 20,
            taboo_radius: 0.02,
            lm_max_iter: 500,
            lm_tol: 1e-10,
            seed: 1,
            keep_best: 10,
            min_window: 30,
        }
    }
}

impl FitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let cfg: FitConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::Config("n_starts must be at least 1".into()));
        }
        if !(self.taboo_radius >= 0.0 && self.taboo_radius < 0.5) {
            return Err(Error::Config(format!(
                "taboo_radius must be in [0, 0.5), got {}",
                self.taboo_radius
            )));
        }
        if self.lm_max_iter == 0 {
            return Err(Error::Config("lm_max_iter must be at least 1".into()));
        }
        if !(self.lm_tol > 0.0) {
            return Err(Error::Config(format!("lm_tol must be positive, got {}", self.lm_tol)));
        }
        if self.keep_best == 0 {
            return Err(Error::Config("keep_best must be at least 1".into()));
        }
        if self.min_window < 4 {
            return Err(Error::Config(format!(
                "min_window must be at least 4 trading days, got {}",
                self.min_window
            )));
        }
        Ok(())
    }

    /// Evaluation budget the config implies for one heuristic search: the
    /// configured walks plus a polish allowance covering half the starts.
    pub fn search_budget(&self) -> usize {
        (self.n_starts * (self.local_moves + 1) + 400 * (self.n_starts / 2).max(4)).max(100)
    }
}
