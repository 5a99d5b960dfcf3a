//! Event-driven execution of the trading rule.
//!
//! Entries fill at the close of the first bar *after* the signal second (a
//! same-second fill would leak the signal bar's close into itself). An open
//! position exits at the close of the first bar where, checked in this
//! order: the adverse move reaches the stop, the favorable move reaches the
//! take-profit, the timeout elapses, or the session ends. One position at a
//! time; signals during a position are ignored.
//!
//! [`execute_from`] is the single payoff kernel: the strategy, the
//! random-entry placebo, and the direction-randomization run all price
//! trades through it, so "identical payoff structure" is literal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SecondBar;
use crate::numerics::neumaier_sum;
use crate::signal::SignalEvent;

/// Transaction-cost components in basis points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub half_spread_bps: f64,
    pub slippage_bps: f64,
    pub fees_bps: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            half_spread_bps: 0.085,
            slippage_bps: 0.30,
            fees_bps: 0.10,
        }
    }
}

impl CostModel {
    /// Round-trip cost: spread paid on entry and exit, plus slippage and
    /// fees. Exactly 0.57 bps at the default components.
    pub fn round_trip_bps(&self) -> f64 {
        2.0 * self.half_spread_bps + self.slippage_bps + self.fees_bps
    }

    pub fn validated(self) -> Result<Self> {
        let fields = [
            ("half_spread_bps", self.half_spread_bps),
            ("slippage_bps", self.slippage_bps),
            ("fees_bps", self.fees_bps),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig {
                    reason: format!("cost component {name} must be finite and >= 0, got {v}"),
                });
            }
        }
        Ok(self)
    }
}

/// Why a trade closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    Stop,
    TakeProfit,
    Timeout,
    SessionClose,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::Stop => "stop",
            ExitReason::TakeProfit => "take_profit",
            ExitReason::Timeout => "timeout",
            ExitReason::SessionClose => "session_close",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "stop" => ExitReason::Stop,
            "take_profit" => ExitReason::TakeProfit,
            "timeout" => ExitReason::Timeout,
            "session_close" => ExitReason::SessionClose,
            _ => return None,
        })
    }
}

/// One completed round trip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub entry_ts: i64,
    pub exit_ts: i64,
    pub direction: i8,
    pub entry_px: f64,
    pub exit_px: f64,
    pub exit_reason: ExitReason,
    /// `direction · log(exit/entry) · 10⁴`.
    pub gross_bps: f64,
    /// `gross_bps − round_trip_bps`.
    pub net_bps: f64,
}

/// Exit-rule parameters shared by every payoff evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitParams {
    pub stop_bps: f64,
    pub take_profit_bps: f64,
    pub timeout_s: i64,
}

/// Price a position opened at `bars[entry_idx].close` under the exit rule.
///
/// Returns `None` when no subsequent bar exists (an exit would be
/// impossible). Exit checks run on each later bar's close in the order
/// stop → take-profit → timeout; if none ever triggers, the position is
/// forced flat at the session's last bar.
pub fn execute_from(
    bars: &[SecondBar],
    entry_idx: usize,
    direction: i8,
    exit: &ExitParams,
    costs: &CostModel,
) -> Option<Trade> {
    debug_assert!(direction == 1 || direction == -1);
    if entry_idx + 1 >= bars.len() {
        return None;
    }
    let entry = &bars[entry_idx];
    let dir = direction as f64;
    for (j, b) in bars.iter().enumerate().skip(entry_idx + 1) {
        let ret_bps = dir * (b.close / entry.close).ln() * 1e4;
        let reason = if ret_bps <= -exit.stop_bps {
            ExitReason::Stop
        } else if ret_bps >= exit.take_profit_bps {
            ExitReason::TakeProfit
        } else if b.ts_s - entry.ts_s >= exit.timeout_s {
            ExitReason::Timeout
        } else if j + 1 == bars.len() {
            ExitReason::SessionClose
        } else {
            continue;
        };
        return Some(Trade {
            entry_ts: entry.ts_s,
            exit_ts: b.ts_s,
            direction,
            entry_px: entry.close,
            exit_px: b.close,
            exit_reason: reason,
            gross_bps: ret_bps,
            net_bps: ret_bps - costs.round_trip_bps(),
        });
    }
    unreachable!("the last bar always exits");
}

/// Result of one backtest window (a day, a fold, or a pooled set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub trades: Vec<Trade>,
    pub total_net_bps: f64,
    pub total_gross_bps: f64,
    /// Fraction of trades with net_bps > 0 (0 when there are no trades).
    pub win_rate: f64,
    pub n: usize,
    pub n_wins: usize,
    /// Signals that could not become trades: no bar after the signal, or
    /// the entry would have landed on the session's last bar.
    pub skipped_no_bar: usize,
    /// Signals ignored because a position was already open or pending.
    pub ignored_in_position: usize,
    /// Half-open time windows `[start, end)` this result covers; kept for
    /// the fold-disjointness check when pooling.
    pub windows: Vec<(i64, i64)>,
}

impl BacktestResult {
    pub fn from_trades(
        trades: Vec<Trade>,
        skipped_no_bar: usize,
        ignored_in_position: usize,
        windows: Vec<(i64, i64)>,
    ) -> Self {
        let n = trades.len();
        let n_wins = trades.iter().filter(|t| t.net_bps > 0.0).count();
        let total_net_bps = neumaier_sum(trades.iter().map(|t| t.net_bps));
        let total_gross_bps = neumaier_sum(trades.iter().map(|t| t.gross_bps));
        let win_rate = if n == 0 { 0.0 } else { n_wins as f64 / n as f64 };
        BacktestResult {
            trades,
            total_net_bps,
            total_gross_bps,
            win_rate,
            n,
            n_wins,
            skipped_no_bar,
            ignored_in_position,
            windows,
        }
    }

    /// An empty result covering a window.
    pub fn empty(window: (i64, i64)) -> Self {
        BacktestResult::from_trades(Vec::new(), 0, 0, vec![window])
    }
}

/// Run the trading rule over one session.
///
/// `signals` must be time-ordered and `bars` must be the same session's
/// bars. `window` is the session's `[open, close)` range, recorded for
/// pooling.
pub fn run_backtest(
    signals: &[SignalEvent],
    bars: &[SecondBar],
    exit: &ExitParams,
    costs: &CostModel,
    window: (i64, i64),
) -> BacktestResult {
    debug_assert!(signals.windows(2).all(|w| w[0].ts_s < w[1].ts_s));
    debug_assert!(bars.windows(2).all(|w| w[0].ts_s < w[1].ts_s));
    let mut trades = Vec::new();
    let mut skipped_no_bar = 0usize;
    let mut ignored_in_position = 0usize;
    // A signal is ignored while a position is open or filling; the position
    // spans (signal_ts, exit_ts], so a new signal at exactly exit_ts is
    // accepted (the exit bar's close is already booked).
    let mut busy_until = i64::MIN;
    for sig in signals {
        if sig.ts_s < busy_until {
            ignored_in_position += 1;
            continue;
        }
        let entry_idx = bars.partition_point(|b| b.ts_s <= sig.ts_s);
        match execute_from(bars, entry_idx, sig.direction_hint, exit, costs) {
            Some(trade) => {
                busy_until = trade.exit_ts;
                trades.push(trade);
            }
            None => skipped_no_bar += 1,
        }
    }
    BacktestResult::from_trades(trades, skipped_no_bar, ignored_in_position, vec![window])
}

/// Pool disjoint fold (or day) results into one.
///
/// Fails if any two windows overlap — overlapping folds would double-count
/// the same market data.
pub fn pool_folds(results: &[BacktestResult]) -> Result<BacktestResult> {
    let mut windows: Vec<(i64, i64)> = results.iter().flat_map(|r| r.windows.clone()).collect();
    windows.sort_unstable();
    for w in windows.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Protocol {
                reason: format!(
                    "fold windows overlap: [{}, {}) and [{}, {})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ),
            });
        }
    }
    let trades: Vec<Trade> = results.iter().flat_map(|r| r.trades.clone()).collect();
    let skipped = results.iter().map(|r| r.skipped_no_bar).sum();
    let ignored = results.iter().map(|r| r.ignored_in_position).sum();
    Ok(BacktestResult::from_trades(trades, skipped, ignored, windows))
}
