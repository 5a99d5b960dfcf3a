//! Engine configuration: every tunable of the signal/backtest protocol in
//! one serialisable struct, with research defaults.

use serde::{Deserialize, Serialize};

use crate::backtest::CostModel;
use crate::error::{Error, Result};

/// How the trailing-return band is applied when qualifying a signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetBandMode {
    /// `|r| ∈ [ret_min_bps, ret_max_bps]` — either direction qualifies
    /// (default).
    #[default]
    Absolute,
    /// `r ∈ [ret_min_bps, ret_max_bps]` — only positive trailing momentum
    /// qualifies.
    Signed,
}

/// All engine tunables. [`EngineConfig::default`] reproduces the reference
/// parameterisation used throughout the test suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Rolling window for transition estimation and volume quintiles, in
    /// seconds.
    pub window_s: i64,
    /// Minimum transitions inside the window for entropy to be defined.
    pub min_transitions: u32,
    /// Entropy percentile below which (strictly) a signal may fire.
    pub entropy_pct: f64,
    /// Volume percentile above which (strictly) a signal may fire.
    pub volume_pct: f64,
    /// Trailing-return band (inclusive), in basis points.
    pub ret_min_bps: f64,
    pub ret_max_bps: f64,
    /// Interpretation of the trailing-return band.
    pub ret_band_mode: RetBandMode,
    /// Trailing-return lookback used for the band and the direction hint,
    /// in seconds.
    pub trailing_s: i64,
    /// Stop-out threshold: exit once the adverse move reaches this many bps.
    pub stop_bps: f64,
    /// Maximum holding period in seconds.
    pub timeout_s: i64,
    /// Forward-return horizon for the magnitude diagnostics, in seconds.
    pub horizon_s: i64,
    /// Candidate take-profit levels searched during calibration (bps).
    pub tp_grid_bps: Vec<f64>,
    /// Transaction-cost model.
    pub costs: CostModel,
    /// Walk-forward fold shape, in trading days.
    pub train_days: u32,
    pub test_days: u32,
    /// Minimum defined entropy points required to calibrate thresholds.
    pub min_calibration_points: usize,
    /// Placebo trial counts.
    pub label_trials: u32,
    pub scramble_trials: u32,
    pub random_entry_trials: u32,
    /// Trials for the coin-flip direction randomisation used by the profit
    /// attribution.
    pub direction_trials: u32,
    /// Number of registered tests for the Bonferroni correction.
    pub bonferroni_m: u32,
    /// Block length (seconds of series) and replicate count for the
    /// block-resampled robustness standard error of the Q1/Q5 ratio.
    pub block_se_len: usize,
    pub block_se_trials: u32,
    /// Master seed for every stochastic component.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window_s: 120,
            min_transitions: 30,
            entropy_pct: 0.05,
            volume_pct: 0.95,
            ret_min_bps: 5.0,
            ret_max_bps: 20.0,
            ret_band_mode: RetBandMode::Absolute,
            trailing_s: 300,
            stop_bps: 5.0,
            timeout_s: 300,
            horizon_s: 300,
            tp_grid_bps: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            costs: CostModel::default(),
            train_days: 10,
            test_days: 5,
            min_calibration_points: 1000,
            label_trials: 1000,
            scramble_trials: 1000,
            random_entry_trials: 10_000,
            direction_trials: 1000,
            bonferroni_m: 14,
            block_se_len: 300,
            block_se_trials: 200,
            seed: 42,
        }
    }
}

impl EngineConfig {
    /// Validate cross-field constraints. Returns the config back so loading
    /// code can chain `EngineConfig::from_json(..)?.validated()?`.
    pub fn validated(self) -> Result<Self> {
        fn fail(reason: impl Into<String>) -> Result<EngineConfig> {
            Err(Error::InvalidConfig {
                reason: reason.into(),
            })
        }
        if self.window_s <= 0 {
            return fail("window_s must be positive");
        }
        if self.min_transitions == 0 {
            return fail("min_transitions must be at least 1");
        }
        if !(self.entropy_pct > 0.0 && self.entropy_pct < 1.0) {
            return fail(format!(
                "entropy_pct must lie in (0, 1), got {}",
                self.entropy_pct
            ));
        }
        if !(self.volume_pct > 0.0 && self.volume_pct < 1.0) {
            return fail(format!(
                "volume_pct must lie in (0, 1), got {}",
                self.volume_pct
            ));
        }
        if !(self.ret_min_bps >= 0.0 && self.ret_min_bps <= self.ret_max_bps) {
            return fail("ret band requires 0 <= ret_min_bps <= ret_max_bps");
        }
        if self.trailing_s <= 0 || self.horizon_s <= 0 {
            return fail("trailing_s and horizon_s must be positive");
        }
        if !(self.stop_bps > 0.0) {
            return fail("stop_bps must be positive");
        }
        if self.timeout_s <= 0 {
            return fail("timeout_s must be positive");
        }
        if self.tp_grid_bps.is_empty() || self.tp_grid_bps.iter().any(|g| !(*g > 0.0)) {
            return fail("tp_grid_bps must be non-empty and strictly positive");
        }
        if self.train_days == 0 || self.test_days == 0 {
            return fail("train_days and test_days must be at least 1");
        }
        self.costs.validated()?;
        Ok(self)
    }

    /// Parse from JSON and validate.
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: EngineConfig = serde_json::from_str(json).map_err(|e| Error::InvalidConfig {
            reason: format!("config JSON: {e}"),
        })?;
        cfg.validated()
    }
}
