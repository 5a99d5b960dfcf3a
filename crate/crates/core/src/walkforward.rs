//! Walk-forward protocol: rolling train/test folds with per-fold threshold
//! calibration and a leakage audit.
//!
//! Fold `k` trains on day positions `[k·test_len, k·test_len + train_len)`
//! and tests on the next `test_len` days. Folds therefore share training
//! days but never test days; every test observation is out-of-sample with
//! respect to the thresholds applied to it. Days that do not fill a
//! complete final fold are unused.

use serde::{Deserialize, Serialize};

use crate::backtest::{pool_folds, run_backtest, BacktestResult, ExitParams};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::parallel::map_slice;
use crate::series::DaySeries;
use crate::signal::{calibrate, generate_signals, Thresholds};

/// One fold of the walk-forward schedule. `*_days` are day identifiers,
/// `*_pos` the corresponding contiguous positions in the sorted day slice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train_days: Vec<i64>,
    pub test_days: Vec<i64>,
    pub train_pos: (usize, usize),
    pub test_pos: (usize, usize),
}

/// Build the fold schedule over sorted, unique day identifiers.
///
/// Fails with [`Error::InsufficientData`] when not even one fold fits.
pub fn make_folds(day_ids: &[i64], train_len: usize, test_len: usize) -> Result<Vec<Fold>> {
    if train_len == 0 || test_len == 0 {
        return Err(Error::InvalidArgument {
            operation: "make_folds",
            reason: "train_len and test_len must be at least 1".into(),
        });
    }
    if day_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument {
            operation: "make_folds",
            reason: "day identifiers must be strictly increasing".into(),
        });
    }
    let d = day_ids.len();
    if d < train_len + test_len {
        return Err(Error::InsufficientData {
            what: format!(
                "walk-forward days ({train_len} train + {test_len} test per fold; \
                 {d} days give 0 folds)"
            ),
            needed: train_len + test_len,
            available: d,
        });
    }
    let n_folds = (d - train_len) / test_len;
    let folds = (0..n_folds)
        .map(|k| {
            let tr = (k * test_len, k * test_len + train_len);
            let te = (tr.1, tr.1 + test_len);
            Fold {
                index: k,
                train_days: day_ids[tr.0..tr.1].to_vec(),
                test_days: day_ids[te.0..te.1].to_vec(),
                train_pos: tr,
                test_pos: te,
            }
        })
        .collect();
    Ok(folds)
}

/// Assert that, in every fold, all training data strictly precedes all test
/// data — both by day identifier and by bar timestamp.
pub fn audit_folds(days: &[DaySeries], folds: &[Fold]) -> Result<()> {
    for f in folds {
        let max_train_id = f.train_days.iter().max();
        let min_test_id = f.test_days.iter().min();
        if max_train_id >= min_test_id {
            return Err(Error::Protocol {
                reason: format!(
                    "fold {}: max train day {max_train_id:?} >= min test day {min_test_id:?}",
                    f.index
                ),
            });
        }
        let max_train_ts = days[f.train_pos.0..f.train_pos.1]
            .iter()
            .filter_map(|d| d.bars.last().map(|b| b.ts_s))
            .max();
        let min_test_ts = days[f.test_pos.0..f.test_pos.1]
            .iter()
            .filter_map(|d| d.bars.first().map(|b| b.ts_s))
            .min();
        if let (Some(tr), Some(te)) = (max_train_ts, min_test_ts) {
            if tr >= te {
                return Err(Error::Protocol {
                    reason: format!(
                        "fold {}: last training bar ts {tr} >= first test bar ts {te}",
                        f.index
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Calibration and out-of-sample outcome of one fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: Fold,
    pub thresholds: Thresholds,
    pub result: BacktestResult,
}

/// Full walk-forward output: per-fold outcomes plus the pooled result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardReport {
    pub folds: Vec<FoldOutcome>,
    pub pooled: BacktestResult,
}

impl WalkForwardReport {
    /// Day identifiers covered by any fold's test window, in order.
    pub fn test_day_ids(&self) -> Vec<i64> {
        let mut ids: Vec<i64> = self
            .folds
            .iter()
            .flat_map(|f| f.fold.test_days.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Run the full walk-forward: calibrate on each fold's training days, trade
/// its test days out-of-sample, and pool the per-fold results.
///
/// `days` must be sorted by day identifier with no duplicates. Folds are
/// independent given their thresholds, so they evaluate in parallel;
/// results are deterministic either way.
pub fn walk_forward(days: &[DaySeries], cfg: &EngineConfig) -> Result<WalkForwardReport> {
    let ids: Vec<i64> = days.iter().map(|d| d.day).collect();
    let folds = make_folds(&ids, cfg.train_days as usize, cfg.test_days as usize)?;
    audit_folds(days, &folds)?;
    let outcomes = map_slice(&folds, |f| run_fold(days, f, cfg));
    let folds: Vec<FoldOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    let pooled = pool_folds(&folds.iter().map(|f| f.result.clone()).collect::<Vec<_>>())?;
    Ok(WalkForwardReport { folds, pooled })
}

fn run_fold(days: &[DaySeries], fold: &Fold, cfg: &EngineConfig) -> Result<FoldOutcome> {
    let train = &days[fold.train_pos.0..fold.train_pos.1];
    let test = &days[fold.test_pos.0..fold.test_pos.1];
    let th = calibrate(train, cfg, &cfg.costs)?;

    // Belt-and-braces leakage check: everything the thresholds saw must
    // precede everything they are applied to.
    let min_test_ts = test
        .iter()
        .filter_map(|d| d.bars.first().map(|b| b.ts_s))
        .min();
    if let Some(te) = min_test_ts {
        if th.calibrated_through_ts >= te {
            return Err(Error::Protocol {
                reason: format!(
                    "fold {}: thresholds calibrated through ts {} but test data starts at {te}",
                    fold.index, th.calibrated_through_ts
                ),
            });
        }
    }

    let exit = ExitParams {
        stop_bps: cfg.stop_bps,
        take_profit_bps: th.take_profit_bps,
        timeout_s: cfg.timeout_s,
    };
    let day_results: Vec<BacktestResult> = test
        .iter()
        .map(|d| {
            let signals = generate_signals(d, &th, cfg);
            run_backtest(
                &signals,
                &d.bars,
                &exit,
                &cfg.costs,
                (d.session.open_s, d.session.close_s),
            )
        })
        .collect();
    let result = pool_folds(&day_results)?;
    Ok(FoldOutcome {
        fold: fold.clone(),
        thresholds: th,
        result,
    })
}
