//! Command-line driver: synthetic data generation, tick ingestion, the
//! entropy and signal stages, backtests, walk-forward evaluation, the
//! statistical validation battery, and a one-stop report emitter.
//!
//! Configuration is a single JSON document with `engine` and `synth`
//! sections, both optional and defaulting field by field. It is resolved in
//! order: `--config FILE`, else the `FLOWENTROPY_CONFIG` environment
//! variable, else built-in defaults; individual flags then override single
//! fields on top. Every command that writes into a directory drops a
//! `run_config.json` sidecar with the fully resolved configuration, and
//! every artifact is announced with one `wrote <path>` line.
//!
//! Exit codes: 0 success, 2 malformed input or arguments, 3 protocol
//! violations such as insufficient data, 4 internal numerical failures.
//! Figures are out of scope: commands emit the figure-ready data tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use flowentropy::backtest::{run_backtest, ExitParams};
use flowentropy::ingest::{
    aggregate_bars, filter_session, parse_ticks, read_bars, write_bars, write_ticks, SecondBar,
    NS_PER_S,
};
use flowentropy::markov::entropy_series;
use flowentropy::parallel::{configure_threads, map_slice};
use flowentropy::report::{
    read_signals_csv, write_accuracy_csv, write_attribution_csv, write_burst_log,
    write_cum_pnl_csv, write_entropy_csv, write_json_report, write_quintile_csv,
    write_signals_csv, write_sweep_csv, write_trades_csv,
};
use flowentropy::series::{day_of_ts, DaySeries};
use flowentropy::signal::{calibrate, generate_signals, Thresholds};
use flowentropy::synth::{generate_market, SynthConfig};
use flowentropy::validate::{sensitivity_sweep, validate_all, StatReport};
use flowentropy::walkforward::{walk_forward, WalkForwardReport};
use flowentropy::{EngineConfig, Error, Result};

const CONFIG_ENV: &str = "FLOWENTROPY_CONFIG";

// =========================================================================
// Configuration
// =========================================================================

/// The one-document run configuration: engine parameters plus the synthetic
/// market, each section optional in the JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    engine: EngineConfig,
    synth: SynthConfig,
}

#[derive(Parser)]
#[command(
    name = "flowentropy",
    version,
    about = "Order-flow entropy research engine",
    arg_required_else_help = true
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// JSON config with `engine` and `synth` sections; defaults to the
    /// FLOWENTROPY_CONFIG environment variable when unset.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override both the market seed and the statistics seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the number of synthetic days.
    #[arg(long, global = true)]
    n_days: Option<u32>,

    /// Override the rolling entropy window, in seconds.
    #[arg(long, global = true)]
    window_s: Option<i64>,

    /// Worker threads for the data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig> {
    let path = g
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut rc: RunConfig = match &path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            serde_json::from_str(&text).map_err(|e| Error::MalformedInput {
                path: p.clone(),
                line: e.line() as u64,
                reason: e.to_string(),
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        rc.engine.seed = seed;
        rc.synth.seed = seed;
    }
    if let Some(n) = g.n_days {
        rc.synth.n_days = n;
    }
    if let Some(w) = g.window_s {
        rc.engine.window_s = w;
    }
    Ok(RunConfig {
        engine: rc.engine.validated()?,
        synth: rc.synth.validated()?,
    })
}

// =========================================================================
// Commands
// =========================================================================

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic market: per-day tick CSVs plus the burst
    /// ledger that records the injected ground truth.
    Synth(SynthCmd),
    /// Parse a tick CSV, keep the trading session, aggregate to 1 s bars.
    Ingest(IngestCmd),
    /// Rolling-entropy series from a bar CSV.
    Entropy(EntropyCmd),
    /// Calibrate thresholds on training bars, emit signals for a target day.
    Signal(SignalCmd),
    /// Replay signals against bars under the standard exit rules.
    Backtest(BacktestCmd),
    /// Chronological train/test folds over a directory of tick days.
    Walkforward(WalkforwardCmd),
    /// Statistical battery: quintiles, placebos, and profit attribution.
    Validate(ValidateCmd),
    /// One-stop run: walk-forward, validation, sweep, and figure tables.
    Report(ReportCmd),
}

#[derive(Args)]
struct SynthCmd {
    /// Directory for `ticks_day_NN.csv`, `bursts.csv`, `run_config.json`.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IngestCmd {
    /// Input tick CSV (`ts_ns,price,size`).
    #[arg(long, value_name = "FILE")]
    ticks: PathBuf,
    /// Output bar CSV.
    #[arg(long, value_name = "FILE")]
    bars: PathBuf,
}

#[derive(Args)]
struct EntropyCmd {
    /// Input bar CSV.
    #[arg(long, value_name = "FILE")]
    bars: PathBuf,
    /// Output entropy CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Fail (exit 4) if any stationary solve does not converge, instead of
    /// flagging and continuing.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SignalCmd {
    /// Training bar CSVs (repeatable); thresholds are calibrated on these.
    #[arg(long, value_name = "FILE", required = true)]
    train_bars: Vec<PathBuf>,
    /// Target-day bar CSV to scan for signals.
    #[arg(long, value_name = "FILE")]
    bars: PathBuf,
    /// Output signal CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optional JSON dump of the calibrated thresholds.
    #[arg(long, value_name = "FILE")]
    thresholds_out: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestCmd {
    /// Bar CSV for the traded day.
    #[arg(long, value_name = "FILE")]
    bars: PathBuf,
    /// Signal CSV to replay.
    #[arg(long, value_name = "FILE")]
    signals: PathBuf,
    /// Take-profit distance in bps (stop and timeout come from the config).
    #[arg(long)]
    take_profit_bps: f64,
    /// Output trade CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct WalkforwardCmd {
    /// Directory of `ticks*.csv` day files.
    #[arg(long, value_name = "DIR")]
    ticks_dir: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ValidateCmd {
    /// Directory of `ticks*.csv` day files.
    #[arg(long, value_name = "DIR")]
    ticks_dir: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportCmd {
    /// Directory of `ticks*.csv` day files.
    #[arg(long, value_name = "DIR")]
    ticks_dir: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

// =========================================================================
// Entry point
// =========================================================================

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.global.threads);
    let rc = match load_config(&cli.global) {
        Ok(rc) => rc,
        Err(e) => return fail(&e),
    };
    let result = match &cli.command {
        Command::Synth(c) => cmd_synth(&rc, c),
        Command::Ingest(c) => cmd_ingest(&rc, c),
        Command::Entropy(c) => cmd_entropy(&rc, c),
        Command::Signal(c) => cmd_signal(&rc, c),
        Command::Backtest(c) => cmd_backtest(&rc, c),
        Command::Walkforward(c) => cmd_walkforward(&rc, c),
        Command::Validate(c) => cmd_validate(&rc, c),
        Command::Report(c) => cmd_report(&rc, c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.category().exit_code() as u8)
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

// =========================================================================
// Shared plumbing
// =========================================================================

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical {
        operation: "serialise artifact",
        reason: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Drop the resolved configuration next to a command's artifacts.
fn write_sidecar(dir: &Path, rc: &RunConfig) -> Result<()> {
    let path = dir.join("run_config.json");
    write_pretty_json(&path, rc)?;
    wrote(&path);
    Ok(())
}

/// Build a `DaySeries` from bars, deriving the day id from the first bar
/// and the session window from the synth section of the config.
fn day_from_bars(rc: &RunConfig, path: &Path, bars: Vec<SecondBar>) -> Result<DaySeries> {
    let first = bars.first().ok_or_else(|| Error::InsufficientData {
        what: format!("bars in {}", path.display()),
        needed: 1,
        available: 0,
    })?;
    let day = day_of_ts(first.ts_s);
    let session = rc.synth.session_for_day(day);
    DaySeries::from_bars(day, session, bars, &rc.engine)
}

fn day_series_from_bars_file(rc: &RunConfig, path: &Path) -> Result<DaySeries> {
    day_from_bars(rc, path, read_bars(path)?)
}

/// Strict tick-day loader for the fold pipeline: malformed rows are fatal.
fn day_from_ticks_file(rc: &RunConfig, path: &Path) -> Result<DaySeries> {
    let parsed = parse_ticks(path)?;
    if let Some(first) = parsed.row_errors.first() {
        return Err(Error::MalformedInput {
            path: path.to_path_buf(),
            line: first.line as u64,
            reason: format!(
                "{} ({} malformed rows in total)",
                first.reason,
                parsed.row_errors.len()
            ),
        });
    }
    let first = parsed.ticks.first().ok_or_else(|| Error::InsufficientData {
        what: format!("ticks in {}", path.display()),
        needed: 1,
        available: 0,
    })?;
    let day = day_of_ts(first.ts_ns.div_euclid(NS_PER_S));
    let session = rc.synth.session_for_day(day);
    let (kept, _) = filter_session(&parsed.ticks, session);
    let bars = aggregate_bars(&kept)?;
    DaySeries::from_bars(day, session, bars, &rc.engine)
}

/// Load every `ticks*.csv` in a directory, one day per file, in name order.
fn load_days(rc: &RunConfig, dir: &Path) -> Result<Vec<DaySeries>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("ticks") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InsufficientData {
            what: format!("tick files (ticks*.csv) in {}", dir.display()),
            needed: 1,
            available: 0,
        });
    }
    let days: Vec<DaySeries> = map_slice(&paths, |p| day_from_ticks_file(rc, p))
        .into_iter()
        .collect::<Result<_>>()?;
    let unconverged: usize = days
        .iter()
        .map(|d| d.entropy.iter().filter(|p| !p.converged).count())
        .sum();
    if unconverged > 0 {
        warn_unconverged(unconverged);
    }
    Ok(days)
}

/// Unconverged stationary solves happen on short or strongly periodic windows;
/// the entropy value is still usable, so surface a diagnostic instead of dying.
fn warn_unconverged(count: usize) {
    eprintln!("warning: {count} stationary solves did not converge; entropy values are flagged");
}

fn tick_file_name(day: i64) -> String {
    format!("ticks_day_{day:02}.csv")
}

fn print_pooled(report: &WalkForwardReport) {
    let p = &report.pooled;
    println!(
        "{} folds, {} trades, win rate {:.1}%, net {:.1} bps",
        report.folds.len(),
        p.n,
        p.win_rate * 100.0,
        p.total_net_bps
    );
}

fn print_stats(stats: &StatReport) {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}"));
    println!(
        "Q1/Q5 {}, Welch t {}, accuracy z {}, label z {}, entry z {}, direction share {}pt",
        fmt(stats.quintiles.q1_over_q5),
        fmt(stats.welch_q1_q5.as_ref().map(|w| w.t)),
        fmt(stats.binomial.as_ref().map(|b| b.z)),
        fmt(stats.label_permutation.z),
        fmt(stats.random_entry.z),
        fmt(stats.attribution.direction_share_pct),
    );
}

// =========================================================================
// Command bodies
// =========================================================================

fn cmd_synth(rc: &RunConfig, c: &SynthCmd) -> Result<()> {
    ensure_dir(&c.out_dir)?;
    let (days, bursts) = generate_market(&rc.synth)?;
    for sd in &days {
        let path = c.out_dir.join(tick_file_name(sd.day));
        write_ticks(&path, &sd.ticks)?;
        wrote(&path);
    }
    let burst_path = c.out_dir.join("bursts.csv");
    write_burst_log(&burst_path, &bursts)?;
    wrote(&burst_path);
    write_sidecar(&c.out_dir, rc)?;
    let n_ticks: usize = days.iter().map(|d| d.ticks.len()).sum();
    println!(
        "{} days, {} ticks, {} bursts",
        days.len(),
        n_ticks,
        bursts.len()
    );
    Ok(())
}

fn cmd_ingest(rc: &RunConfig, c: &IngestCmd) -> Result<()> {
    let parsed = parse_ticks(&c.ticks)?;
    if !parsed.row_errors.is_empty() {
        let first = &parsed.row_errors[0];
        eprintln!(
            "warning: {} malformed rows skipped (first at line {}: {})",
            parsed.row_errors.len(),
            first.line,
            first.reason
        );
    }
    let first = parsed.ticks.first().ok_or_else(|| Error::InsufficientData {
        what: format!("ticks in {}", c.ticks.display()),
        needed: 1,
        available: 0,
    })?;
    let day = day_of_ts(first.ts_ns.div_euclid(NS_PER_S));
    let session = rc.synth.session_for_day(day);
    let (kept, dropped) = filter_session(&parsed.ticks, session);
    let bars = aggregate_bars(&kept)?;
    write_bars(&c.bars, &bars)?;
    wrote(&c.bars);
    println!(
        "day {day}: {} lines, {} ticks kept, {} outside session, {} bars",
        parsed.lines_read,
        kept.len(),
        dropped,
        bars.len()
    );
    Ok(())
}

fn cmd_entropy(rc: &RunConfig, c: &EntropyCmd) -> Result<()> {
    let bars = read_bars(&c.bars)?;
    let points = entropy_series(&bars, rc.engine.window_s, rc.engine.min_transitions)?;
    let unconverged = points.iter().filter(|p| !p.converged).count();
    if unconverged > 0 {
        if c.strict {
            let first = points.iter().find(|p| !p.converged).map(|p| p.ts_s).unwrap_or(0);
            return Err(Error::Numerical {
                operation: "entropy_series",
                reason: format!(
                    "{unconverged} stationary solves did not converge (first at ts {first})"
                ),
            });
        }
        warn_unconverged(unconverged);
    }
    write_entropy_csv(&c.out, &points)?;
    wrote(&c.out);
    let defined = points.iter().filter(|p| p.h.is_some()).count();
    println!("{} points, {} with defined entropy", points.len(), defined);
    Ok(())
}

fn cmd_signal(rc: &RunConfig, c: &SignalCmd) -> Result<()> {
    let train: Vec<DaySeries> = c
        .train_bars
        .iter()
        .map(|p| day_series_from_bars_file(rc, p))
        .collect::<Result<_>>()?;
    let th: Thresholds = calibrate(&train, &rc.engine, &rc.engine.costs)?;
    let target = day_series_from_bars_file(rc, &c.bars)?;
    let signals = generate_signals(&target, &th, &rc.engine);
    write_signals_csv(&c.out, &signals)?;
    wrote(&c.out);
    if let Some(th_path) = &c.thresholds_out {
        write_pretty_json(th_path, &th)?;
        wrote(th_path);
    }
    println!(
        "{} signals on day {} (h < {:.6}, volume > {})",
        signals.len(),
        target.day,
        th.h_lo,
        th.vol_hi
    );
    Ok(())
}

fn cmd_backtest(rc: &RunConfig, c: &BacktestCmd) -> Result<()> {
    let day = day_series_from_bars_file(rc, &c.bars)?;
    let signals = read_signals_csv(&c.signals)?;
    let exit = ExitParams {
        stop_bps: rc.engine.stop_bps,
        take_profit_bps: c.take_profit_bps,
        timeout_s: rc.engine.timeout_s,
    };
    let result = run_backtest(
        &signals,
        &day.bars,
        &exit,
        &rc.engine.costs,
        (day.session.open_s, day.session.close_s),
    );
    write_trades_csv(&c.out, &result.trades)?;
    wrote(&c.out);
    println!(
        "{} trades ({} signals ignored in-position, {} without a next bar), \
         win rate {:.1}%, net {:.1} bps",
        result.n,
        result.ignored_in_position,
        result.skipped_no_bar,
        result.win_rate * 100.0,
        result.total_net_bps
    );
    Ok(())
}

fn cmd_walkforward(rc: &RunConfig, c: &WalkforwardCmd) -> Result<()> {
    ensure_dir(&c.out_dir)?;
    let days = load_days(rc, &c.ticks_dir)?;
    let report = walk_forward(&days, &rc.engine)?;

    let json_path = c.out_dir.join("walkforward.json");
    write_json_report(&json_path, rc, &report)?;
    wrote(&json_path);
    let acc_path = c.out_dir.join("accuracy.csv");
    write_accuracy_csv(&acc_path, &report)?;
    wrote(&acc_path);
    let trades_path = c.out_dir.join("trades.csv");
    write_trades_csv(&trades_path, &report.pooled.trades)?;
    wrote(&trades_path);
    let pnl_path = c.out_dir.join("cum_pnl.csv");
    write_cum_pnl_csv(&pnl_path, &report.pooled.trades)?;
    wrote(&pnl_path);
    write_sidecar(&c.out_dir, rc)?;
    print_pooled(&report);
    Ok(())
}

fn cmd_validate(rc: &RunConfig, c: &ValidateCmd) -> Result<()> {
    ensure_dir(&c.out_dir)?;
    let days = load_days(rc, &c.ticks_dir)?;
    let report = walk_forward(&days, &rc.engine)?;
    let stats = validate_all(&days, &report, &rc.engine)?;

    let json_path = c.out_dir.join("validate.json");
    write_json_report(&json_path, rc, &stats)?;
    wrote(&json_path);
    let quintile_path = c.out_dir.join("quintile.csv");
    write_quintile_csv(&quintile_path, &stats.quintiles)?;
    wrote(&quintile_path);
    let attr_path = c.out_dir.join("attribution.csv");
    write_attribution_csv(&attr_path, &stats.attribution)?;
    wrote(&attr_path);
    write_sidecar(&c.out_dir, rc)?;
    print_pooled(&report);
    print_stats(&stats);
    Ok(())
}

fn cmd_report(rc: &RunConfig, c: &ReportCmd) -> Result<()> {
    ensure_dir(&c.out_dir)?;
    let days = load_days(rc, &c.ticks_dir)?;
    let report = walk_forward(&days, &rc.engine)?;
    let stats = validate_all(&days, &report, &rc.engine)?;
    let sweep = sensitivity_sweep(&days, &rc.engine)?;

    let wf_path = c.out_dir.join("walkforward.json");
    write_json_report(&wf_path, rc, &report)?;
    wrote(&wf_path);
    let val_path = c.out_dir.join("validate.json");
    write_json_report(&val_path, rc, &stats)?;
    wrote(&val_path);
    let acc_path = c.out_dir.join("accuracy.csv");
    write_accuracy_csv(&acc_path, &report)?;
    wrote(&acc_path);
    let trades_path = c.out_dir.join("trades.csv");
    write_trades_csv(&trades_path, &report.pooled.trades)?;
    wrote(&trades_path);
    let pnl_path = c.out_dir.join("cum_pnl.csv");
    write_cum_pnl_csv(&pnl_path, &report.pooled.trades)?;
    wrote(&pnl_path);
    let quintile_path = c.out_dir.join("quintile.csv");
    write_quintile_csv(&quintile_path, &stats.quintiles)?;
    wrote(&quintile_path);
    let attr_path = c.out_dir.join("attribution.csv");
    write_attribution_csv(&attr_path, &stats.attribution)?;
    wrote(&attr_path);
    let sweep_path = c.out_dir.join("sweep.csv");
    write_sweep_csv(&sweep_path, &sweep)?;
    wrote(&sweep_path);
    write_sidecar(&c.out_dir, rc)?;
    print_pooled(&report);
    print_stats(&stats);
    Ok(())
}
