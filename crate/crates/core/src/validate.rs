//! Statistical validation of the entropy→magnitude claim: quintile
//! diagnostics, a placebo battery, profit attribution, parameter
//! sensitivity, and block-resampled robustness errors.
//!
//! Everything stochastic draws from per-trial child RNG streams, so each
//! routine is deterministic in `(data, config, seed)` regardless of thread
//! count. Stream indices 101–105 are reserved here (the synthetic-market
//! generator uses per-day indices starting at 0, so the two never collide
//! under one master seed).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backtest::{execute_from, CostModel, ExitParams};
use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::numerics::{mean, neumaier_sum, population_sd};
use crate::parallel::map_indexed;
use crate::rng::{child_rng, child_seed};
use crate::series::DaySeries;
use crate::stats::{
    binomial_direction, percentile_linear, placebo_z, sorted_for_percentile, welch_t,
    BinomialTest, WelchTest,
};
use crate::walkforward::WalkForwardReport;

/// RNG stream indices for the validation battery (see module docs).
const STREAM_LABEL: u64 = 101;
const STREAM_SCRAMBLE: u64 = 102;
const STREAM_RANDOM_ENTRY: u64 = 103;
const STREAM_DIRECTION: u64 = 104;
const STREAM_BLOCK: u64 = 105;

// =========================================================================
// Magnitude sample
// =========================================================================

/// One observation for the magnitude analysis: entropy at a second and the
/// signed forward return over the configured horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnitudePoint {
    pub ts_s: i64,
    pub h: f64,
    pub fwd_bps: f64,
}

/// Collect every defined entropy point whose full forward horizon fits
/// inside its session. The forward return is taken to the close of the
/// nearest bar at or before `ts + horizon_s` (mirroring the trailing-return
/// convention), so quiet tape shortens the effective horizon rather than
/// peeking past it.
pub fn magnitude_points(days: &[DaySeries], horizon_s: i64) -> Vec<MagnitudePoint> {
    let mut out = Vec::new();
    for d in days {
        let Some(last) = d.bars.last() else { continue };
        for (k, ep) in d.entropy.iter().enumerate() {
            let Some(h) = ep.h else { continue };
            let bar = &d.bars[k + 1];
            let target = bar.ts_s + horizon_s;
            if last.ts_s < target {
                break; // every later point lacks the horizon too
            }
            let j = d.bars.partition_point(|b| b.ts_s <= target) - 1;
            let fwd_bps = (d.bars[j].close / bar.close).ln() * 1e4;
            out.push(MagnitudePoint {
                ts_s: bar.ts_s,
                h,
                fwd_bps,
            });
        }
    }
    out
}

/// Entropy quintile cut points: the 20/40/60/80th percentiles of `h`.
pub fn quintile_thresholds(points: &[MagnitudePoint]) -> Result<[f64; 4]> {
    let hs = sorted_for_percentile(points.iter().map(|p| p.h).collect())?;
    let mut thr = [0.0; 4];
    for (i, q) in [0.2, 0.4, 0.6, 0.8].iter().enumerate() {
        thr[i] = percentile_linear(&hs, *q)?;
    }
    Ok(thr)
}

/// Quintile index for an entropy value: 0 is the lowest-entropy bucket.
/// Values exactly on a cut point fall into the lower bucket.
pub fn quintile_index(thresholds: &[f64; 4], h: f64) -> usize {
    thresholds.iter().take_while(|&&t| h > t).count()
}

/// The magnitude table: mean |forward return| per entropy quintile plus the
/// low-entropy conditional row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuintileTable {
    pub n: usize,
    pub thresholds: [f64; 4],
    pub counts: [usize; 5],
    pub mean_abs_bps: [Option<f64>; 5],
    /// Mean |move| in the lowest quintile over the highest; `None` when a
    /// quintile is empty or the Q5 mean is zero (degenerate entropy).
    pub q1_over_q5: Option<f64>,
    /// Entropy value at the low-tail percentile (e.g. the 5th).
    pub low_h_threshold: f64,
    pub cond_low_mean_bps: Option<f64>,
    pub uncond_mean_bps: f64,
    /// `cond_low_mean_bps / uncond_mean_bps`.
    pub cond_factor: Option<f64>,
}

/// Build the quintile table. `low_pct` is the percentile defining the
/// conditional low-entropy row (strictly-below, like the signal rule).
pub fn magnitude_stats(points: &[MagnitudePoint], low_pct: f64) -> Result<QuintileTable> {
    if points.is_empty() {
        return Err(Error::InsufficientData {
            what: "magnitude points".into(),
            needed: 1,
            available: 0,
        });
    }
    let thresholds = quintile_thresholds(points)?;
    let mut buckets: [Vec<f64>; 5] = Default::default();
    for p in points {
        buckets[quintile_index(&thresholds, p.h)].push(p.fwd_bps.abs());
    }
    let counts = [
        buckets[0].len(),
        buckets[1].len(),
        buckets[2].len(),
        buckets[3].len(),
        buckets[4].len(),
    ];
    let mean_abs_bps = [
        mean(&buckets[0]),
        mean(&buckets[1]),
        mean(&buckets[2]),
        mean(&buckets[3]),
        mean(&buckets[4]),
    ];
    let q1_over_q5 = match (mean_abs_bps[0], mean_abs_bps[4]) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let hs = sorted_for_percentile(points.iter().map(|p| p.h).collect())?;
    let low_h_threshold = percentile_linear(&hs, low_pct)?;
    let low: Vec<f64> = points
        .iter()
        .filter(|p| p.h < low_h_threshold)
        .map(|p| p.fwd_bps.abs())
        .collect();
    let cond_low_mean_bps = mean(&low);
    let all: Vec<f64> = points.iter().map(|p| p.fwd_bps.abs()).collect();
    let uncond_mean_bps = mean(&all).expect("points is non-empty");
    let cond_factor = match cond_low_mean_bps {
        Some(c) if uncond_mean_bps > 0.0 => Some(c / uncond_mean_bps),
        _ => None,
    };
    Ok(QuintileTable {
        n: points.len(),
        thresholds,
        counts,
        mean_abs_bps,
        q1_over_q5,
        low_h_threshold,
        cond_low_mean_bps,
        uncond_mean_bps,
        cond_factor,
    })
}

/// Welch's t-test of |forward return| in the lowest vs highest entropy
/// quintile.
pub fn welch_q1_q5(points: &[MagnitudePoint]) -> Result<WelchTest> {
    let thresholds = quintile_thresholds(points)?;
    let mut q1 = Vec::new();
    let mut q5 = Vec::new();
    for p in points {
        match quintile_index(&thresholds, p.h) {
            0 => q1.push(p.fwd_bps.abs()),
            4 => q5.push(p.fwd_bps.abs()),
            _ => {}
        }
    }
    welch_t(&q1, &q5)
}

// =========================================================================
// Placebos
// =========================================================================

/// Outcome of one placebo: the observed statistic against its null
/// distribution. `degenerate` marks a null too tight to score (sd < 1e-12)
/// or trials that had to be skipped because their statistic was undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaceboOutcome {
    pub observed: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    /// `(observed − null_mean) / null_sd`; `None` when degenerate.
    pub z: Option<f64>,
    /// Trials that produced a defined statistic.
    pub trials: usize,
    pub skipped: usize,
    pub degenerate: bool,
}

fn outcome_from(observed: f64, nulls: &[f64], skipped: usize) -> Result<PlaceboOutcome> {
    let null_mean = mean(nulls).ok_or(Error::Numerical {
        operation: "placebo",
        reason: "every trial produced an undefined statistic".into(),
    })?;
    let null_sd = population_sd(nulls).expect("non-empty by the mean check");
    let z = placebo_z(observed, null_mean, null_sd);
    Ok(PlaceboOutcome {
        observed,
        null_mean,
        null_sd,
        z,
        trials: nulls.len(),
        skipped,
        degenerate: z.is_none() || skipped > 0,
    })
}

/// Q1/Q5 ratio of mean |move| for an assignment of quintile indices.
fn ratio_for(qidx: &[usize], abs: &[f64]) -> Option<f64> {
    let mut sums = [0.0f64; 5];
    let mut counts = [0usize; 5];
    for (&q, &a) in qidx.iter().zip(abs) {
        sums[q] += a;
        counts[q] += 1;
    }
    if counts[0] == 0 || counts[4] == 0 {
        return None;
    }
    let m1 = sums[0] / counts[0] as f64;
    let m5 = sums[4] / counts[4] as f64;
    (m5 > 0.0).then(|| m1 / m5)
}

/// Label-permutation placebo: hold the quintile assignment fixed, shuffle
/// the returns against it, and recompute the Q1/Q5 ratio each trial. A real
/// entropy→magnitude link dies under permutation, so the observed ratio
/// should sit far outside this null.
pub fn placebo_label_permutation(
    points: &[MagnitudePoint],
    trials: u32,
    seed: u64,
) -> Result<PlaceboOutcome> {
    let thresholds = quintile_thresholds(points)?;
    let qidx: Vec<usize> = points
        .iter()
        .map(|p| quintile_index(&thresholds, p.h))
        .collect();
    let abs: Vec<f64> = points.iter().map(|p| p.fwd_bps.abs()).collect();
    let observed = ratio_for(&qidx, &abs).ok_or(Error::Numerical {
        operation: "placebo_label_permutation",
        reason: "observed Q1/Q5 ratio is undefined".into(),
    })?;
    let raw = map_indexed(trials as usize, |t| {
        let mut rng = child_rng(seed, t as u64);
        let mut shuffled = abs.clone();
        shuffled.shuffle(&mut rng);
        ratio_for(&qidx, &shuffled)
    });
    let nulls: Vec<f64> = raw.iter().filter_map(|r| *r).collect();
    outcome_from(observed, &nulls, raw.len() - nulls.len())
}

/// Temporal-scramble placebo: circularly shift the return series against
/// the entropy series by a random non-zero offset each trial. Preserves
/// both marginal distributions and short-range autocorrelation, destroys
/// the alignment.
pub fn placebo_temporal_scramble(
    points: &[MagnitudePoint],
    trials: u32,
    seed: u64,
) -> Result<PlaceboOutcome> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "points for temporal scramble".into(),
            needed: 2,
            available: n,
        });
    }
    let thresholds = quintile_thresholds(points)?;
    let qidx: Vec<usize> = points
        .iter()
        .map(|p| quintile_index(&thresholds, p.h))
        .collect();
    let abs: Vec<f64> = points.iter().map(|p| p.fwd_bps.abs()).collect();
    let observed = ratio_for(&qidx, &abs).ok_or(Error::Numerical {
        operation: "placebo_temporal_scramble",
        reason: "observed Q1/Q5 ratio is undefined".into(),
    })?;
    let raw = map_indexed(trials as usize, |t| {
        let mut rng = child_rng(seed, t as u64);
        let offset = rng.gen_range(1..n); // zero (identity) excluded
        let rotated: Vec<f64> = (0..n).map(|i| abs[(i + offset) % n]).collect();
        ratio_for(&qidx, &rotated)
    });
    let nulls: Vec<f64> = raw.iter().filter_map(|r| *r).collect();
    outcome_from(observed, &nulls, raw.len() - nulls.len())
}

// =========================================================================
// Random-entry placebo and profit attribution
// =========================================================================

/// A test day paired with the exit parameters its fold calibrated; random
/// and direction-randomised trades on this day use exactly the exit rule
/// the strategy traded it with.
#[derive(Clone, Copy, Debug)]
pub struct TestDayCtx<'a> {
    pub day: &'a DaySeries,
    pub exit: ExitParams,
}

/// Pair every fold's test days with that fold's exit parameters. `days`
/// must be the same slice that produced `report`.
pub fn test_day_contexts<'a>(
    days: &'a [DaySeries],
    report: &WalkForwardReport,
    cfg: &EngineConfig,
) -> Vec<TestDayCtx<'a>> {
    let mut ctxs = Vec::new();
    for f in &report.folds {
        let exit = ExitParams {
            stop_bps: cfg.stop_bps,
            take_profit_bps: f.thresholds.take_profit_bps,
            timeout_s: cfg.timeout_s,
        };
        for d in &days[f.fold.test_pos.0..f.fold.test_pos.1] {
            ctxs.push(TestDayCtx { day: d, exit });
        }
    }
    ctxs
}

/// Random-entry placebo: each trial opens `n_trades` positions at entry
/// bars drawn without replacement from the pooled test days (any bar with a
/// successor qualifies), with coin-flip directions, priced by the same
/// payoff kernel as the strategy. Trials' trades are evaluated
/// independently, so unlike the strategy they may overlap in time.
pub fn placebo_random_entry(
    ctxs: &[TestDayCtx<'_>],
    n_trades: usize,
    observed_total_net_bps: f64,
    costs: &CostModel,
    trials: u32,
    seed: u64,
) -> Result<PlaceboOutcome> {
    let valid: Vec<(usize, usize)> = ctxs
        .iter()
        .enumerate()
        .flat_map(|(di, c)| (0..c.day.bars.len().saturating_sub(1)).map(move |bi| (di, bi)))
        .collect();
    if n_trades == 0 || valid.len() < n_trades {
        return Err(Error::InsufficientData {
            what: "entry seconds for the random-entry placebo".into(),
            needed: n_trades.max(1),
            available: valid.len(),
        });
    }
    let nulls: Vec<f64> = map_indexed(trials as usize, |t| {
        let mut rng = child_rng(seed, t as u64);
        let picks = rand::seq::index::sample(&mut rng, valid.len(), n_trades);
        neumaier_sum(picks.iter().map(|ix| {
            let (di, bi) = valid[ix];
            let dir = if rng.gen_bool(0.5) { 1 } else { -1 };
            let ctx = &ctxs[di];
            execute_from(&ctx.day.bars, bi, dir, &ctx.exit, costs)
                .expect("entry bar has a successor by construction")
                .net_bps
        }))
    });
    outcome_from(observed_total_net_bps, &nulls, 0)
}

/// Decomposition of the strategy's edge into timing, direction and payoff
/// components (shares of observed PnL, summing to 100 when defined).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub observed_total_net_bps: f64,
    pub random_entry_mean_bps: f64,
    pub direction_random_mean_bps: f64,
    /// `(observed − random_entry_mean) / observed`, as a percentage.
    pub timing_share_pct: Option<f64>,
    /// `(observed − direction_random_mean) / observed`, as a percentage.
    pub direction_share_pct: Option<f64>,
    /// Remainder: `100 − timing − direction`.
    pub payoff_share_pct: Option<f64>,
    /// Shares are undefined when observed PnL is not positive.
    pub defined: bool,
}

/// Attribute the pooled walk-forward PnL.
///
/// The direction-randomised mean re-prices the strategy's own entries with
/// coin-flip directions (same entry bars, same per-fold exits); the
/// random-entry mean comes from [`placebo_random_entry`]. If the strategy's
/// edge is pure magnitude timing, the direction share sits near zero.
pub fn attribute_profit(
    report: &WalkForwardReport,
    ctxs: &[TestDayCtx<'_>],
    costs: &CostModel,
    direction_trials: u32,
    seed: u64,
    random_entry_mean_bps: f64,
) -> Result<Attribution> {
    // Locate each pooled trade's entry bar inside its test day.
    let mut entries: Vec<(usize, usize)> = Vec::new();
    for f in &report.folds {
        for t in &f.result.trades {
            let (di, ctx) = ctxs
                .iter()
                .enumerate()
                .find(|(_, c)| {
                    t.entry_ts >= c.day.session.open_s && t.entry_ts < c.day.session.close_s
                })
                .ok_or_else(|| Error::Protocol {
                    reason: format!("trade entry ts {} outside every test session", t.entry_ts),
                })?;
            let bi = ctx.day.bars.partition_point(|b| b.ts_s < t.entry_ts);
            if ctx.day.bars.get(bi).map(|b| b.ts_s) != Some(t.entry_ts) {
                return Err(Error::Protocol {
                    reason: format!("trade entry ts {} does not match a bar", t.entry_ts),
                });
            }
            entries.push((di, bi));
        }
    }
    let observed = report.pooled.total_net_bps;
    let nulls: Vec<f64> = map_indexed(direction_trials as usize, |t| {
        let mut rng = child_rng(seed, t as u64);
        neumaier_sum(entries.iter().map(|&(di, bi)| {
            let dir = if rng.gen_bool(0.5) { 1 } else { -1 };
            let ctx = &ctxs[di];
            execute_from(&ctx.day.bars, bi, dir, &ctx.exit, costs)
                .expect("strategy entries are executable")
                .net_bps
        }))
    });
    let direction_random_mean_bps = mean(&nulls).ok_or(Error::InvalidArgument {
        operation: "attribute_profit",
        reason: "direction_trials must be at least 1".into(),
    })?;
    let defined = observed > 0.0;
    let timing_share_pct = defined.then(|| (observed - random_entry_mean_bps) / observed * 100.0);
    let direction_share_pct =
        defined.then(|| (observed - direction_random_mean_bps) / observed * 100.0);
    let payoff_share_pct = match (timing_share_pct, direction_share_pct) {
        (Some(t), Some(d)) => Some(100.0 - t - d),
        _ => None,
    };
    Ok(Attribution {
        observed_total_net_bps: observed,
        random_entry_mean_bps,
        direction_random_mean_bps,
        timing_share_pct,
        direction_share_pct,
        payoff_share_pct,
        defined,
    })
}

// =========================================================================
// Block-resampled robustness error
// =========================================================================

/// Standard error of the Q1/Q5 ratio under a circular block bootstrap of
/// the (entropy, return) sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSe {
    pub se: Option<f64>,
    pub block_len: usize,
    pub trials_used: usize,
    pub trials_skipped: usize,
}

pub fn block_se_q1_q5(
    points: &[MagnitudePoint],
    block_len: usize,
    trials: u32,
    seed: u64,
) -> Result<BlockSe> {
    if block_len == 0 {
        return Err(Error::InvalidArgument {
            operation: "block_se_q1_q5",
            reason: "block_len must be at least 1".into(),
        });
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "points for the block bootstrap".into(),
            needed: 2,
            available: n,
        });
    }
    let thresholds = quintile_thresholds(points)?;
    let qidx: Vec<usize> = points
        .iter()
        .map(|p| quintile_index(&thresholds, p.h))
        .collect();
    let abs: Vec<f64> = points.iter().map(|p| p.fwd_bps.abs()).collect();
    let raw = map_indexed(trials as usize, |t| {
        let mut rng = child_rng(seed, t as u64);
        let mut sums = [0.0f64; 5];
        let mut counts = [0usize; 5];
        let mut taken = 0usize;
        while taken < n {
            let start = rng.gen_range(0..n);
            for j in 0..block_len.min(n - taken) {
                let i = (start + j) % n;
                sums[qidx[i]] += abs[i];
                counts[qidx[i]] += 1;
                taken += 1;
            }
        }
        if counts[0] == 0 || counts[4] == 0 {
            return None;
        }
        let m5 = sums[4] / counts[4] as f64;
        (m5 > 0.0).then(|| (sums[0] / counts[0] as f64) / m5)
    });
    let used: Vec<f64> = raw.iter().filter_map(|r| *r).collect();
    Ok(BlockSe {
        se: if used.len() >= 2 {
            population_sd(&used)
        } else {
            None
        },
        block_len,
        trials_used: used.len(),
        trials_skipped: raw.len() - used.len(),
    })
}

// =========================================================================
// Sensitivity sweep
// =========================================================================

/// One cell of the sensitivity grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    /// Perturbation relative to baseline, in percent (−50…+50).
    pub level_pct: i32,
    /// The perturbed parameter value.
    pub value: f64,
    /// False when the perturbed config fails validation (the row is
    /// reported but not run).
    pub valid: bool,
    pub n_trades: Option<usize>,
    pub total_net_bps: Option<f64>,
    /// PnL change vs baseline in percent of |baseline|; `None` when the
    /// baseline is zero or the row is invalid.
    pub pct_change_pct: Option<f64>,
}

const SWEEP_PARAMS: [&str; 4] = ["entropy_pct", "volume_pct", "stop_bps", "timeout_s"];
const SWEEP_MULTS: [f64; 5] = [0.5, 0.75, 1.0, 1.25, 1.5];

/// Re-run the full walk-forward at ±50/±25/0% perturbations of four key
/// parameters: exactly `4 × 5 = 20` rows, in a fixed order. Invalid
/// perturbations (e.g. a volume percentile pushed to or past 1) are
/// reported as such rather than silently clamped.
pub fn sensitivity_sweep(days: &[DaySeries], cfg: &EngineConfig) -> Result<Vec<SweepRow>> {
    let baseline = crate::walkforward::walk_forward(days, cfg)?.pooled;
    let mut rows = Vec::with_capacity(SWEEP_PARAMS.len() * SWEEP_MULTS.len());
    for param in SWEEP_PARAMS {
        for mult in SWEEP_MULTS {
            let level_pct = ((mult - 1.0) * 100.0).round() as i32;
            let mut c = cfg.clone();
            let value = match param {
                "entropy_pct" => {
                    c.entropy_pct *= mult;
                    c.entropy_pct
                }
                "volume_pct" => {
                    c.volume_pct *= mult;
                    c.volume_pct
                }
                "stop_bps" => {
                    c.stop_bps *= mult;
                    c.stop_bps
                }
                "timeout_s" => {
                    c.timeout_s = ((c.timeout_s as f64) * mult).round() as i64;
                    c.timeout_s as f64
                }
                _ => unreachable!(),
            };
            let row = match c.validated() {
                Err(_) => SweepRow {
                    param: param.into(),
                    level_pct,
                    value,
                    valid: false,
                    n_trades: None,
                    total_net_bps: None,
                    pct_change_pct: None,
                },
                Ok(c) => {
                    let pooled = crate::walkforward::walk_forward(days, &c)?.pooled;
                    let pct_change_pct = (baseline.total_net_bps != 0.0).then(|| {
                        (pooled.total_net_bps - baseline.total_net_bps)
                            / baseline.total_net_bps.abs()
                            * 100.0
                    });
                    SweepRow {
                        param: param.into(),
                        level_pct,
                        value,
                        valid: true,
                        n_trades: Some(pooled.n),
                        total_net_bps: Some(pooled.total_net_bps),
                        pct_change_pct,
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

// =========================================================================
// Assembled report
// =========================================================================

/// Everything the statistical validation produces, in one serialisable
/// block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub n_magnitude_points: usize,
    pub quintiles: QuintileTable,
    pub welch_q1_q5: Option<WelchTest>,
    /// Directional accuracy of the pooled out-of-sample trades: wins are
    /// trades whose gross move went the predicted way (`gross_bps > 0`;
    /// exact zeros count as misses).
    pub direction_wins: usize,
    pub direction_n: usize,
    pub direction_accuracy: Option<f64>,
    pub binomial: Option<BinomialTest>,
    pub label_permutation: PlaceboOutcome,
    pub temporal_scramble: PlaceboOutcome,
    pub random_entry: PlaceboOutcome,
    pub attribution: Attribution,
    pub block_se: BlockSe,
    pub bonferroni_m: u32,
    /// `0.05 / bonferroni_m`.
    pub bonferroni_alpha: f64,
}

/// Run the full battery against a finished walk-forward.
///
/// The magnitude sample covers every defined entropy point in `days` (test
/// and train alike — it diagnoses the data property, not the trading rule);
/// trade-level statistics and placebos use only out-of-sample material.
/// Zero pooled trades make the trade-level battery meaningless and fail
/// fast with [`Error::InsufficientData`].
pub fn validate_all(
    days: &[DaySeries],
    report: &WalkForwardReport,
    cfg: &EngineConfig,
) -> Result<StatReport> {
    let points = magnitude_points(days, cfg.horizon_s);
    let quintiles = magnitude_stats(&points, cfg.entropy_pct)?;
    let welch = welch_q1_q5(&points).ok();

    let trades = &report.pooled.trades;
    let direction_n = trades.len();
    let direction_wins = trades.iter().filter(|t| t.gross_bps > 0.0).count();
    let direction_accuracy = (direction_n > 0).then(|| direction_wins as f64 / direction_n as f64);
    let binomial = if direction_n > 0 {
        Some(binomial_direction(direction_wins as u64, direction_n as u64)?)
    } else {
        None
    };

    let label_permutation = placebo_label_permutation(
        &points,
        cfg.label_trials,
        child_seed(cfg.seed, STREAM_LABEL),
    )?;
    let temporal_scramble = placebo_temporal_scramble(
        &points,
        cfg.scramble_trials,
        child_seed(cfg.seed, STREAM_SCRAMBLE),
    )?;

    let ctxs = test_day_contexts(days, report, cfg);
    let random_entry = placebo_random_entry(
        &ctxs,
        direction_n,
        report.pooled.total_net_bps,
        &cfg.costs,
        cfg.random_entry_trials,
        child_seed(cfg.seed, STREAM_RANDOM_ENTRY),
    )?;
    let attribution = attribute_profit(
        report,
        &ctxs,
        &cfg.costs,
        cfg.direction_trials,
        child_seed(cfg.seed, STREAM_DIRECTION),
        random_entry.null_mean,
    )?;
    let block_se = block_se_q1_q5(
        &points,
        cfg.block_se_len,
        cfg.block_se_trials,
        child_seed(cfg.seed, STREAM_BLOCK),
    )?;

    Ok(StatReport {
        n_magnitude_points: points.len(),
        quintiles,
        welch_q1_q5: welch,
        direction_wins,
        direction_n,
        direction_accuracy,
        binomial,
        label_permutation,
        temporal_scramble,
        random_entry,
        attribution,
        block_se,
        bonferroni_m: cfg.bonferroni_m,
        bonferroni_alpha: 0.05 / cfg.bonferroni_m as f64,
    })
}
