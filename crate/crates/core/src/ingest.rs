//! Tick ingestion: CSV parsing, session filtering, and second-bar
//! aggregation.
//!
//! Input is a tick CSV with columns `ts_ns,price,size` (header optional).
//! Malformed rows are collected as row-level errors — counted and reported,
//! never silently dropped — while a timestamp that jumps backwards by more
//! than one second is a fatal feed error. Regressions of at most one second
//! (exchange clock jitter) are tolerated: the tick folds into the bar of the
//! latest second seen so far.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Nanoseconds per second.
pub const NS_PER_S: i64 = 1_000_000_000;

/// One trade tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TickRecord {
    pub ts_ns: i64,
    pub price: f64,
    pub size: u32,
}

/// One second of aggregated trading: the last trade price in the second and
/// the summed size. Quiet seconds produce no bar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondBar {
    pub ts_s: i64,
    pub close: f64,
    pub volume: u64,
}

/// A trading session, `[open_s, close_s)` in epoch seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionSpec {
    pub open_s: i64,
    pub close_s: i64,
}

impl SessionSpec {
    pub fn new(open_s: i64, close_s: i64) -> Result<Self> {
        if close_s <= open_s {
            return Err(Error::InvalidArgument {
                operation: "SessionSpec::new",
                reason: format!("close_s ({close_s}) must exceed open_s ({open_s})"),
            });
        }
        Ok(SessionSpec { open_s, close_s })
    }

    /// Whether a tick timestamp falls inside the session.
    pub fn contains_ns(&self, ts_ns: i64) -> bool {
        ts_ns >= self.open_s * NS_PER_S && ts_ns < self.close_s * NS_PER_S
    }

    pub fn len_s(&self) -> i64 {
        self.close_s - self.open_s
    }
}

/// A malformed input row: kept for reporting, excluded from the data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file.
    pub line: usize,
    pub reason: String,
}

/// Result of parsing a tick file.
#[derive(Clone, Debug, Default)]
pub struct ParsedTicks {
    pub ticks: Vec<TickRecord>,
    pub row_errors: Vec<RowError>,
    /// Total lines read, including the header if present.
    pub lines_read: usize,
}

const TICK_HEADER: &str = "ts_ns,price,size";
const BAR_HEADER: &str = "ts_s,close,volume";

fn parse_tick_line(line: &str) -> std::result::Result<TickRecord, String> {
    let mut fields = line.split(',');
    let ts = fields.next().ok_or("missing ts_ns")?;
    let price = fields.next().ok_or("missing price")?;
    let size = fields.next().ok_or("missing size")?;
    if fields.next().is_some() {
        return Err("expected exactly 3 fields".into());
    }
    let ts_ns: i64 = ts
        .trim()
        .parse()
        .map_err(|_| format!("bad ts_ns {ts:?}"))?;
    let price: f64 = price
        .trim()
        .parse()
        .map_err(|_| format!("bad price {price:?}"))?;
    if !price.is_finite() || price <= 0.0 {
        return Err(format!("price must be finite and positive, got {price}"));
    }
    let size: u32 = size
        .trim()
        .parse()
        .map_err(|_| format!("bad size {size:?}"))?;
    if size == 0 {
        return Err("size must be positive".into());
    }
    Ok(TickRecord { ts_ns, price, size })
}

/// Parse a tick CSV.
///
/// The header line `ts_ns,price,size` is recognised and skipped if present.
/// Rows that fail to parse become [`RowError`]s; a timestamp regression of
/// more than one second between parsed ticks is fatal.
pub fn parse_ticks(path: &Path) -> Result<ParsedTicks> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = ParsedTicks::default();
    let mut prev_ts_ns: Option<i64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        out.lines_read += 1;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 && trimmed == TICK_HEADER {
            continue;
        }
        match parse_tick_line(trimmed) {
            Ok(tick) => {
                if let Some(prev) = prev_ts_ns {
                    if tick.ts_ns < prev - NS_PER_S {
                        return Err(Error::TimestampRegression {
                            path: path.to_path_buf(),
                            line: lineno as u64,
                            prev_ts_ns: prev,
                            ts_ns: tick.ts_ns,
                        });
                    }
                }
                prev_ts_ns = Some(prev_ts_ns.map_or(tick.ts_ns, |p| p.max(tick.ts_ns)));
                out.ticks.push(tick);
            }
            Err(reason) => out.row_errors.push(RowError {
                line: lineno,
                reason,
            }),
        }
    }
    Ok(out)
}

/// Keep ticks inside the session; returns `(kept, dropped_count)`.
pub fn filter_session(ticks: &[TickRecord], session: SessionSpec) -> (Vec<TickRecord>, usize) {
    let kept: Vec<TickRecord> = ticks
        .iter()
        .copied()
        .filter(|t| session.contains_ns(t.ts_ns))
        .collect();
    let dropped = ticks.len() - kept.len();
    (kept, dropped)
}

/// Aggregate ticks into second bars.
///
/// Each bar's `close` is the last tick of that second *in file order* and
/// `volume` is the summed size. Ticks whose second is earlier than the
/// latest second seen (possible only within the tolerated ≤ 1 s jitter)
/// fold into the latest bar: their size is added and, being later in file
/// order, their price becomes the close. Quiet seconds yield no bar, so
/// output timestamps are strictly increasing but not necessarily contiguous.
pub fn aggregate_bars(ticks: &[TickRecord]) -> Result<Vec<SecondBar>> {
    let mut bars: Vec<SecondBar> = Vec::new();
    for t in ticks {
        let ts_s = t.ts_ns.div_euclid(NS_PER_S);
        match bars.last_mut() {
            Some(last) if ts_s <= last.ts_s => {
                if last.ts_s - ts_s > 1 {
                    return Err(Error::Protocol {
                        reason: format!(
                            "tick at second {ts_s} regresses more than 1s behind bar {}",
                            last.ts_s
                        ),
                    });
                }
                last.close = t.price;
                last.volume += t.size as u64;
            }
            _ => bars.push(SecondBar {
                ts_s,
                close: t.price,
                volume: t.size as u64,
            }),
        }
    }
    Ok(bars)
}

// =========================================================================
// File I/O
// =========================================================================

/// Write ticks as CSV (`ts_ns,price,size`, prices with 4 decimals).
pub fn write_ticks(path: &Path, ticks: &[TickRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = String::with_capacity(64);
    writeln!(w, "{TICK_HEADER}").map_err(|e| Error::io(path, e))?;
    for t in ticks {
        buf.clear();
        let _ = writeln!(buf, "{},{:.4},{}", t.ts_ns, t.price, t.size);
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write second bars as CSV (`ts_s,close,volume`, closes with 4 decimals).
pub fn write_bars(path: &Path, bars: &[SecondBar]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = String::with_capacity(48);
    writeln!(w, "{BAR_HEADER}").map_err(|e| Error::io(path, e))?;
    for b in bars {
        buf.clear();
        let _ = writeln!(buf, "{},{:.4},{}", b.ts_s, b.close, b.volume);
        w.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read second bars written by [`write_bars`]. Any malformed row is fatal
/// here: bar files are artifacts of this pipeline, so damage means the run
/// directory is corrupt.
pub fn read_bars(path: &Path) -> Result<Vec<SecondBar>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut bars = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 && trimmed == BAR_HEADER {
            continue;
        }
        let mut fields = trimmed.split(',');
        let mut parse = || -> Option<SecondBar> {
            let ts_s: i64 = fields.next()?.trim().parse().ok()?;
            let close: f64 = fields.next()?.trim().parse().ok()?;
            let volume: u64 = fields.next()?.trim().parse().ok()?;
            if fields.next().is_some() || !close.is_finite() {
                return None;
            }
            Some(SecondBar { ts_s, close, volume })
        };
        match parse() {
            Some(bar) => bars.push(bar),
            None => {
                return Err(Error::MalformedInput {
                    path: path.to_path_buf(),
                    line: lineno as u64,
                    reason: format!("bad bar row {trimmed:?}"),
                })
            }
        }
    }
    Ok(bars)
}
