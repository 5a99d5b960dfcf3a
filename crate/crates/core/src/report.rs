//! Artifact writers and readers: CSV series and ledgers, figure-ready
//! tables, and JSON reports carrying the resolved config for provenance.
//!
//! Numeric formatting is fixed (prices 4 decimals, basis points 6, entropy
//! 12) so identical runs produce byte-identical files; `write → read →
//! write` is idempotent at the byte level. The `converged` flag on entropy
//! points is runtime-only diagnostics and is not serialised.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backtest::{ExitReason, Trade};
use crate::error::{Error, Result};
use crate::markov::EntropyPoint;
use crate::signal::SignalEvent;
use crate::synth::Burst;
use crate::validate::{Attribution, QuintileTable, SweepRow};
use crate::walkforward::WalkForwardReport;

pub const ENTROPY_HEADER: &str = "ts_s,h,defined,n_transitions";
pub const SIGNAL_HEADER: &str = "ts_s,h,trailing_ret_bps,volume,direction_hint";
pub const TRADE_HEADER: &str =
    "entry_ts,exit_ts,direction,entry_px,exit_px,exit_reason,gross_bps,net_bps";
pub const BURST_HEADER: &str = "day,start_s,len_s,sign";

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedInput {
        path: path.to_path_buf(),
        line: line as u64,
        reason: reason.into(),
    }
}

/// Iterate data lines of a pipeline-artifact CSV, verifying the header.
fn read_lines(path: &Path, header: &str) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']).to_string();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 {
            if trimmed != header {
                return Err(malformed(
                    path,
                    1,
                    format!("expected header {header:?}, got {trimmed:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        out.push((lineno, trimmed));
    }
    if !saw_header {
        return Err(malformed(path, 1, format!("missing header {header:?}")));
    }
    Ok(out)
}

// =========================================================================
// Entropy series
// =========================================================================

/// Write the rolling-entropy series (`h` empty when undefined).
pub fn write_entropy_csv(path: &Path, points: &[EntropyPoint]) -> Result<()> {
    let mut w = open_writer(path)?;
    let mut buf = String::with_capacity(48);
    writeln!(w, "{ENTROPY_HEADER}").map_err(|e| Error::io(path, e))?;
    for p in points {
        buf.clear();
        match p.h {
            Some(h) => {
                let _ = writeln!(buf, "{},{:.12},true,{}", p.ts_s, h, p.n_transitions);
            }
            None => {
                let _ = writeln!(buf, "{},,false,{}", p.ts_s, p.n_transitions);
            }
        }
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read an entropy series written by [`write_entropy_csv`]. The runtime
/// `converged` flag is not stored and reads back as `true`.
pub fn read_entropy_csv(path: &Path) -> Result<Vec<EntropyPoint>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path, ENTROPY_HEADER)? {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = || -> Option<EntropyPoint> {
            let [ts, h, defined, n]: [&str; 4] = fields.as_slice().try_into().ok()?;
            let ts_s: i64 = ts.parse().ok()?;
            let n_transitions: u32 = n.parse().ok()?;
            let h = match (defined, h) {
                ("true", h) => Some(h.parse::<f64>().ok()?),
                ("false", "") => None,
                _ => return None,
            };
            Some(EntropyPoint {
                ts_s,
                h,
                n_transitions,
                converged: true,
            })
        };
        out.push(parse().ok_or_else(|| malformed(path, lineno, format!("bad row {line:?}")))?);
    }
    Ok(out)
}

// =========================================================================
// Signals
// =========================================================================

pub fn write_signals_csv(path: &Path, signals: &[SignalEvent]) -> Result<()> {
    let mut w = open_writer(path)?;
    let mut buf = String::with_capacity(64);
    writeln!(w, "{SIGNAL_HEADER}").map_err(|e| Error::io(path, e))?;
    for s in signals {
        buf.clear();
        let _ = writeln!(
            buf,
            "{},{:.12},{:.6},{},{}",
            s.ts_s, s.h, s.trailing_ret_bps, s.volume, s.direction_hint
        );
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_signals_csv(path: &Path) -> Result<Vec<SignalEvent>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path, SIGNAL_HEADER)? {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = || -> Option<SignalEvent> {
            let [ts, h, ret, vol, dir]: [&str; 5] = fields.as_slice().try_into().ok()?;
            Some(SignalEvent {
                ts_s: ts.parse().ok()?,
                h: h.parse().ok()?,
                trailing_ret_bps: ret.parse().ok()?,
                volume: vol.parse().ok()?,
                direction_hint: dir.parse().ok()?,
            })
        };
        out.push(parse().ok_or_else(|| malformed(path, lineno, format!("bad row {line:?}")))?);
    }
    Ok(out)
}

// =========================================================================
// Trade ledgers
// =========================================================================

pub fn write_trades_csv(path: &Path, trades: &[Trade]) -> Result<()> {
    let mut w = open_writer(path)?;
    let mut buf = String::with_capacity(96);
    writeln!(w, "{TRADE_HEADER}").map_err(|e| Error::io(path, e))?;
    for t in trades {
        buf.clear();
        let _ = writeln!(
            buf,
            "{},{},{},{:.4},{:.4},{},{:.6},{:.6}",
            t.entry_ts,
            t.exit_ts,
            t.direction,
            t.entry_px,
            t.exit_px,
            t.exit_reason.as_str(),
            t.gross_bps,
            t.net_bps
        );
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trades_csv(path: &Path) -> Result<Vec<Trade>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path, TRADE_HEADER)? {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = || -> Option<Trade> {
            let [entry_ts, exit_ts, dir, epx, xpx, reason, gross, net]: [&str; 8] =
                fields.as_slice().try_into().ok()?;
            Some(Trade {
                entry_ts: entry_ts.parse().ok()?,
                exit_ts: exit_ts.parse().ok()?,
                direction: dir.parse().ok()?,
                entry_px: epx.parse().ok()?,
                exit_px: xpx.parse().ok()?,
                exit_reason: ExitReason::parse(reason)?,
                gross_bps: gross.parse().ok()?,
                net_bps: net.parse().ok()?,
            })
        };
        out.push(parse().ok_or_else(|| malformed(path, lineno, format!("bad row {line:?}")))?);
    }
    Ok(out)
}

// =========================================================================
// Burst log (synthetic ground truth)
// =========================================================================

pub fn write_burst_log(path: &Path, bursts: &[Burst]) -> Result<()> {
    let mut w = open_writer(path)?;
    let mut buf = String::with_capacity(32);
    writeln!(w, "{BURST_HEADER}").map_err(|e| Error::io(path, e))?;
    for b in bursts {
        buf.clear();
        let _ = writeln!(buf, "{},{},{},{}", b.day, b.start_s, b.len_s, b.sign);
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_burst_log(path: &Path) -> Result<Vec<Burst>> {
    let mut out = Vec::new();
    for (lineno, line) in read_lines(path, BURST_HEADER)? {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = || -> Option<Burst> {
            let [day, start, len, sign]: [&str; 4] = fields.as_slice().try_into().ok()?;
            let sign: i8 = sign.parse().ok()?;
            if sign != 1 && sign != -1 {
                return None;
            }
            Some(Burst {
                day: day.parse().ok()?,
                start_s: start.parse().ok()?,
                len_s: len.parse().ok()?,
                sign,
            })
        };
        out.push(parse().ok_or_else(|| malformed(path, lineno, format!("bad row {line:?}")))?);
    }
    Ok(out)
}

// =========================================================================
// JSON reports with embedded provenance
// =========================================================================

/// Writing wrapper: the resolved config rides along with every JSON report.
#[derive(Serialize)]
struct WithConfig<'a, C: Serialize, T: Serialize> {
    config: &'a C,
    report: &'a T,
}

/// Reading wrapper for files produced by [`write_json_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub config: serde_json::Value,
    pub report: T,
}

/// Write `{ "config": …, "report": … }`, pretty-printed with a trailing
/// newline. Identical inputs produce byte-identical files.
pub fn write_json_report<C: Serialize, T: Serialize>(
    path: &Path,
    config: &C,
    report: &T,
) -> Result<()> {
    let mut w = open_writer(path)?;
    serde_json::to_writer_pretty(&mut w, &WithConfig { config, report }).map_err(|e| {
        Error::Numerical {
            operation: "write_json_report",
            reason: format!("serialisation failed: {e}"),
        }
    })?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read any JSON artifact (use `Envelope<T>` for files written by
/// [`write_json_report`]).
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e.line(), e.to_string()))
}

// =========================================================================
// Figure-ready tables
// =========================================================================

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Mean |forward move| per entropy quintile (figure: magnitude vs entropy).
pub fn write_quintile_csv(path: &Path, table: &QuintileTable) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "quintile,count,mean_abs_fwd_bps").map_err(|e| Error::io(path, e))?;
    for q in 0..5 {
        writeln!(
            w,
            "Q{},{},{}",
            q + 1,
            table.counts[q],
            fmt_opt(table.mean_abs_bps[q])
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-fold and pooled out-of-sample directional accuracy (figure: accuracy
/// by fold). Wins are trades whose gross move went the predicted way.
pub fn write_accuracy_csv(path: &Path, report: &WalkForwardReport) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "fold,trades,gross_wins,accuracy").map_err(|e| Error::io(path, e))?;
    let mut row = |label: &str, trades: &[Trade]| -> Result<()> {
        let wins = trades.iter().filter(|t| t.gross_bps > 0.0).count();
        let acc = if trades.is_empty() {
            String::new()
        } else {
            format!("{:.6}", wins as f64 / trades.len() as f64)
        };
        writeln!(w, "{label},{},{wins},{acc}", trades.len()).map_err(|e| Error::io(path, e))
    };
    for f in &report.folds {
        row(&f.fold.index.to_string(), &f.result.trades)?;
    }
    row("pooled", &report.pooled.trades)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Profit-attribution shares (figure: where the edge lives).
pub fn write_attribution_csv(path: &Path, attr: &Attribution) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "component,share_pct,reference_bps").map_err(|e| Error::io(path, e))?;
    let observed_share = attr.defined.then_some(100.0);
    let rows: [(&str, Option<f64>, Option<f64>); 4] = [
        (
            "observed",
            observed_share,
            Some(attr.observed_total_net_bps),
        ),
        (
            "timing",
            attr.timing_share_pct,
            Some(attr.random_entry_mean_bps),
        ),
        (
            "direction",
            attr.direction_share_pct,
            Some(attr.direction_random_mean_bps),
        ),
        ("payoff", attr.payoff_share_pct, None),
    ];
    for (name, share, reference) in rows {
        writeln!(w, "{name},{},{}", fmt_opt(share), fmt_opt(reference))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sensitivity grid, one row per perturbation.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "param,level_pct,value,valid,n_trades,total_net_bps,pct_change_pct")
        .map_err(|e| Error::io(path, e))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6},{},{},{},{}",
            r.param,
            r.level_pct,
            r.value,
            r.valid,
            r.n_trades.map(|n| n.to_string()).unwrap_or_default(),
            fmt_opt(r.total_net_bps),
            fmt_opt(r.pct_change_pct),
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Cumulative net PnL over the pooled trade sequence (figure: equity
/// curve). The running sum uses the same compensated accumulation as the
/// pooled totals, so the final row matches the report.
pub fn write_cum_pnl_csv(path: &Path, trades: &[Trade]) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "trade_index,entry_ts,exit_ts,net_bps,cum_net_bps")
        .map_err(|e| Error::io(path, e))?;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (i, t) in trades.iter().enumerate() {
        let x = t.net_bps;
        let new = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - new) + x
        } else {
            (x - new) + sum
        };
        sum = new;
        writeln!(
            w,
            "{},{},{},{:.6},{:.6}",
            i,
            t.entry_ts,
            t.exit_ts,
            t.net_bps,
            sum + comp
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
