//! Threshold calibration and signal generation.
//!
//! Calibration fixes three thresholds on training data — the 5th percentile
//! of defined entropy, the 95th percentile of bar volume, and a take-profit
//! level chosen from a fixed grid by training PnL — and freezes them before
//! any test data is touched. A signal fires at second `t` when all of:
//!
//! 1. `H_t` is defined and strictly below the entropy threshold,
//! 2. the bar's volume is strictly above the volume threshold,
//! 3. the trailing 5-minute return lies inside the configured band
//!    (absolute value by default) and is non-zero.
//!
//! The direction hint is the sign of the trailing return; it exists because
//! the trading rule needs a side, not because entropy carries direction.

use serde::{Deserialize, Serialize};

use crate::backtest::{run_backtest, CostModel, ExitParams};
use crate::config::{EngineConfig, RetBandMode};
use crate::error::{Error, Result};
use crate::ingest::SecondBar;
use crate::numerics::neumaier_sum;
use crate::series::DaySeries;
use crate::stats::{percentile_linear, sorted_for_percentile};

/// Thresholds frozen on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Entropy threshold: the `entropy_pct` percentile of defined training H.
    pub h_lo: f64,
    /// Volume threshold: the `volume_pct` percentile of training bar volume.
    pub vol_hi: f64,
    pub ret_min_bps: f64,
    pub ret_max_bps: f64,
    /// Take-profit chosen from the grid by maximum net training PnL,
    /// smallest value on ties.
    pub take_profit_bps: f64,
    /// Last training timestamp; used to assert calibration strictly precedes
    /// the test window.
    pub calibrated_through_ts: i64,
    /// True when every training volume was identical, in which case the
    /// strict volume condition can never fire.
    pub degenerate_volume: bool,
}

/// One entry signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalEvent {
    pub ts_s: i64,
    pub h: f64,
    pub trailing_ret_bps: f64,
    pub volume: u64,
    /// Sign of the trailing return; zero returns emit no signal.
    pub direction_hint: i8,
}

/// Trailing log return in bps at bar `i`: `log(P_i / P_ref) · 10⁴` where
/// `P_ref` is the close of the nearest bar at or before `ts_i − trailing_s`
/// in the same session. `None` when no such bar exists (session warm-up).
pub fn trailing_return_bps(bars: &[SecondBar], i: usize, trailing_s: i64) -> Option<f64> {
    let cutoff = bars[i].ts_s - trailing_s;
    let k = bars[..i].partition_point(|b| b.ts_s <= cutoff);
    if k == 0 {
        return None;
    }
    Some((bars[i].close / bars[k - 1].close).ln() * 1e4)
}

fn ret_band_ok(r: f64, mode: RetBandMode, min_bps: f64, max_bps: f64) -> bool {
    match mode {
        RetBandMode::Absolute => {
            let a = r.abs();
            a >= min_bps && a <= max_bps
        }
        RetBandMode::Signed => r >= min_bps && r <= max_bps,
    }
}

/// Generate signals for one test day under frozen thresholds.
pub fn generate_signals(day: &DaySeries, th: &Thresholds, cfg: &EngineConfig) -> Vec<SignalEvent> {
    let mut out = Vec::new();
    for (k, ep) in day.entropy.iter().enumerate() {
        let Some(h) = ep.h else { continue };
        if h >= th.h_lo {
            continue;
        }
        let bar = &day.bars[k + 1];
        debug_assert_eq!(bar.ts_s, ep.ts_s);
        if bar.volume as f64 <= th.vol_hi {
            continue;
        }
        let Some(r) = trailing_return_bps(&day.bars, k + 1, cfg.trailing_s) else {
            continue;
        };
        if !ret_band_ok(r, cfg.ret_band_mode, th.ret_min_bps, th.ret_max_bps) {
            continue;
        }
        let direction_hint = if r > 0.0 {
            1
        } else if r < 0.0 {
            -1
        } else {
            continue;
        };
        out.push(SignalEvent {
            ts_s: ep.ts_s,
            h,
            trailing_ret_bps: r,
            volume: bar.volume,
            direction_hint,
        });
    }
    out
}

/// Calibrate thresholds on training days.
///
/// Percentiles use inclusive linear interpolation between order statistics.
/// The take-profit grid is evaluated by running the full trading rule over
/// the training days themselves and keeping the level with the highest net
/// PnL (smallest level on ties).
pub fn calibrate(train: &[DaySeries], cfg: &EngineConfig, costs: &CostModel) -> Result<Thresholds> {
    let hs: Vec<f64> = train
        .iter()
        .flat_map(|d| d.entropy.iter().filter_map(|p| p.h))
        .collect();
    if hs.len() < cfg.min_calibration_points {
        return Err(Error::InsufficientData {
            what: "defined entropy points in the training window".into(),
            needed: cfg.min_calibration_points,
            available: hs.len(),
        });
    }
    let h_lo = percentile_linear(&sorted_for_percentile(hs)?, cfg.entropy_pct)?;

    let vols: Vec<f64> = train
        .iter()
        .flat_map(|d| d.bars.iter().map(|b| b.volume as f64))
        .collect();
    if vols.is_empty() {
        return Err(Error::InsufficientData {
            what: "training bars".into(),
            needed: 1,
            available: 0,
        });
    }
    let degenerate_volume = vols.windows(2).all(|w| w[0] == w[1]);
    let vol_hi = percentile_linear(&sorted_for_percentile(vols)?, cfg.volume_pct)?;

    let calibrated_through_ts = train
        .iter()
        .filter_map(|d| d.last_ts())
        .max()
        .ok_or(Error::InsufficientData {
            what: "training bars".into(),
            needed: 1,
            available: 0,
        })?;

    let mut best: Option<(f64, f64)> = None; // (take_profit, train PnL)
    for &tp in &cfg.tp_grid_bps {
        let candidate = Thresholds {
            h_lo,
            vol_hi,
            ret_min_bps: cfg.ret_min_bps,
            ret_max_bps: cfg.ret_max_bps,
            take_profit_bps: tp,
            calibrated_through_ts,
            degenerate_volume,
        };
        let exit = ExitParams {
            stop_bps: cfg.stop_bps,
            take_profit_bps: tp,
            timeout_s: cfg.timeout_s,
        };
        let pnl = neumaier_sum(train.iter().map(|day| {
            let signals = generate_signals(day, &candidate, cfg);
            run_backtest(
                &signals,
                &day.bars,
                &exit,
                costs,
                (day.session.open_s, day.session.close_s),
            )
            .total_net_bps
        }));
        // Strict improvement only, so the smallest grid value wins ties.
        if best.map_or(true, |(_, best_pnl)| pnl > best_pnl) {
            best = Some((tp, pnl));
        }
    }
    let (take_profit_bps, _) = best.ok_or(Error::InvalidConfig {
        reason: "empty take-profit grid".into(),
    })?;

    Ok(Thresholds {
        h_lo,
        vol_hi,
        ret_min_bps: cfg.ret_min_bps,
        ret_max_bps: cfg.ret_max_bps,
        take_profit_bps,
        calibrated_through_ts,
        degenerate_volume,
    })
}
