//! Synthetic market generator: a noise-trader baseline with injectable
//! informed-trader bursts, used as ground truth for acceptance runs.
//!
//! Baseline regime: trades arrive as a Poisson stream with i.i.d. ±1 sides,
//! a diffusive latent price (σ in bps per √second), and an optional tiny
//! per-trade impact. Burst regime: an execution algorithm dominates the
//! tape and prints like a metronome — at least one trade every second, a
//! constant per-second volume, sides persisting on the informed leg — while
//! a large resting order absorbs the pressure, damping the latent diffusion
//! to `burst_pin_vol_factor` of its usual scale. The burst runs in two
//! phases. During the *pinned* phase closes go flat while per-second volume
//! sits tied at `burst_bar_volume` (with occasional refresh pulses of
//! `burst_pulse_volume`): the tied volumes collapse the rolling volume
//! quintile and the flat closes collapse the price sign, producing a deep
//! low-entropy signature from states that are invariant under the buy/sell
//! relabelling. After `burst_drift_delay_s` the absorbed pressure releases:
//! the latent price ramps at `burst_drift_bps_per_s` toward its new level
//! for the burst's remainder, with a sign drawn by a fair coin when the
//! burst was created.
//!
//! The two-phase design is what makes the market honest about direction:
//! the entropy signature appears during the pinned phase, before the price
//! has moved, so the trailing return at signal time is pre-burst noise
//! carrying no information about the coming break's sign. Magnitude becomes
//! predictable; direction stays a coin flip.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SessionSpec, TickRecord, NS_PER_S};
use crate::numerics::mean;
use crate::parallel::map_indexed;
use crate::rng::child_rng;
use crate::series::S_PER_DAY;
use crate::stats::{percentile_linear, sorted_for_percentile};

/// Generator configuration. Defaults are the desk-scale acceptance setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_days: u32,
    /// Session length in seconds.
    pub session_s: i64,
    /// Session open as seconds after midnight.
    pub open_sod_s: i64,
    pub start_price: f64,
    pub tick_size: f64,
    /// Baseline trade arrivals per second.
    pub base_tick_rate: f64,
    /// Latent-price diffusion, bps per √second.
    pub noise_vol_bps: f64,
    /// Per-trade signed impact on the latent price, bps.
    pub impact_bps: f64,
    /// Bounce amplitude: trades print this many ticks away from the latent
    /// price on their own side.
    pub half_spread_ticks: f64,
    /// Expected bursts per day (Poisson).
    pub burst_rate: f64,
    pub burst_len_s: i64,
    /// Arrival-rate multiplier inside bursts.
    pub burst_rate_mult: f64,
    /// Latent drift inside bursts, bps per second, with the burst's sign.
    pub burst_drift_bps_per_s: f64,
    /// Seconds after burst start before the drift activates. Until then the
    /// burst is in its pinned phase.
    pub burst_drift_delay_s: i64,
    /// Diffusion damping inside bursts: the latent σ is multiplied by this
    /// factor for the burst's whole duration (1 = no damping).
    pub burst_pin_vol_factor: f64,
    /// Probability that an in-burst trade keeps the previous trade's side.
    pub burst_sign_persist: f64,
    /// Shares the execution algorithm prints per second inside a burst. Every
    /// in-burst second carries exactly this volume (or the pulse volume), so
    /// in-burst seconds tie with each other in any rolling volume ranking.
    pub burst_bar_volume: u64,
    /// Volume of a refresh pulse: a second where the algorithm reloads and
    /// prints a larger clip. Pulses only occur during the pinned phase.
    pub burst_pulse_volume: u64,
    /// Per-second probability of a refresh pulse during the pinned phase.
    pub burst_pulse_prob: f64,
    /// Log-normal trade-size parameters (baseline regime).
    pub size_lognorm_mu: f64,
    pub size_lognorm_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_days: 36,
            session_s: 23_400,
            open_sod_s: 34_200,
            start_price: 600.0,
            tick_size: 0.01,
            base_tick_rate: 2.0,
            noise_vol_bps: 0.70,
            impact_bps: 0.0,
            half_spread_ticks: 0.5,
            burst_rate: 40.0,
            burst_len_s: 330,
            burst_rate_mult: 4.0,
            burst_drift_bps_per_s: 1.2,
            burst_drift_delay_s: 300,
            burst_pin_vol_factor: 0.06,
            burst_sign_persist: 0.998,
            burst_bar_volume: 1_200,
            burst_pulse_volume: 2_400,
            burst_pulse_prob: 0.12,
            size_lognorm_mu: 3.9,
            size_lognorm_sigma: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validated(self) -> Result<Self> {
        let bad = |reason: String| Err(Error::InvalidConfig { reason });
        if self.n_days == 0 {
            return bad("n_days must be at least 1".into());
        }
        if self.session_s <= 0 || self.open_sod_s < 0 || self.open_sod_s + self.session_s > S_PER_DAY
        {
            return bad(format!(
                "session [{} + {}s] must fit inside one day",
                self.open_sod_s, self.session_s
            ));
        }
        if !(self.start_price > 0.0) || !self.start_price.is_finite() {
            return bad(format!("start_price must be positive, got {}", self.start_price));
        }
        if !(self.tick_size > 0.0) {
            return bad(format!("tick_size must be positive, got {}", self.tick_size));
        }
        let per_unit = (1.0 / self.tick_size).round();
        if per_unit < 1.0 || (per_unit * self.tick_size - 1.0).abs() > 1e-9 {
            return bad(format!(
                "tick_size must divide 1 evenly (e.g. 0.01), got {}",
                self.tick_size
            ));
        }
        if !(self.base_tick_rate > 0.0) {
            return bad("base_tick_rate must be positive".into());
        }
        if self.noise_vol_bps < 0.0 || self.impact_bps < 0.0 || self.half_spread_ticks < 0.0 {
            return bad("noise_vol_bps, impact_bps and half_spread_ticks must be >= 0".into());
        }
        if self.burst_rate < 0.0 {
            return bad("burst_rate must be >= 0".into());
        }
        if self.burst_rate > 0.0 && !(0 < self.burst_len_s && self.burst_len_s < self.session_s) {
            return bad(format!(
                "burst_len_s must lie in (0, session_s), got {}",
                self.burst_len_s
            ));
        }
        if self.burst_rate_mult < 1.0 {
            return bad("burst_rate_mult must be >= 1".into());
        }
        if self.burst_drift_bps_per_s < 0.0 {
            return bad("burst_drift_bps_per_s must be >= 0".into());
        }
        if !(0..=self.burst_len_s.max(0)).contains(&self.burst_drift_delay_s) {
            return bad(format!(
                "burst_drift_delay_s must lie in [0, burst_len_s], got {}",
                self.burst_drift_delay_s
            ));
        }
        if !(0.0..=1.0).contains(&self.burst_pin_vol_factor) {
            return bad(format!(
                "burst_pin_vol_factor must lie in [0, 1], got {}",
                self.burst_pin_vol_factor
            ));
        }
        if !(0.0..=1.0).contains(&self.burst_sign_persist) {
            return bad("burst_sign_persist must lie in [0, 1]".into());
        }
        if self.burst_bar_volume < 1 {
            return bad("burst_bar_volume must be >= 1".into());
        }
        if !(self.burst_bar_volume..=1_000_000).contains(&self.burst_pulse_volume) {
            return bad(format!(
                "burst_pulse_volume must lie in [burst_bar_volume, 1e6], got {}",
                self.burst_pulse_volume
            ));
        }
        if !(0.0..=1.0).contains(&self.burst_pulse_prob) {
            return bad("burst_pulse_prob must lie in [0, 1]".into());
        }
        if !self.size_lognorm_mu.is_finite() || !(self.size_lognorm_sigma >= 0.0) {
            return bad("trade-size parameters must be finite".into());
        }
        Ok(self)
    }

    /// Session spec for a day index.
    pub fn session_for_day(&self, day: i64) -> SessionSpec {
        let open = day * S_PER_DAY + self.open_sod_s;
        SessionSpec {
            open_s: open,
            close_s: open + self.session_s,
        }
    }
}

/// Ground-truth record of one informed burst.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Burst {
    pub day: i64,
    /// Burst start in epoch seconds.
    pub start_s: i64,
    pub len_s: i64,
    /// Informed side: +1 buying, −1 selling.
    pub sign: i8,
}

impl Burst {
    pub fn end_s(&self) -> i64 {
        self.start_s + self.len_s
    }

    pub fn contains(&self, ts_s: i64) -> bool {
        (self.start_s..self.end_s()).contains(&ts_s)
    }
}

/// One generated day.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthDay {
    pub day: i64,
    pub session: SessionSpec,
    pub ticks: Vec<TickRecord>,
}

/// Generate the full market: one tick stream per day plus the burst log.
///
/// Day `k` is produced entirely from the RNG stream `(seed, k)`, so
/// generation parallelizes without affecting output.
pub fn generate_market(cfg: &SynthConfig) -> Result<(Vec<SynthDay>, Vec<Burst>)> {
    let cfg = cfg.clone().validated()?;
    let results = map_indexed(cfg.n_days as usize, |k| generate_day(&cfg, k as i64));
    let mut days = Vec::with_capacity(results.len());
    let mut bursts = Vec::new();
    for r in results {
        let (day, mut day_bursts) = r?;
        days.push(day);
        bursts.append(&mut day_bursts);
    }
    Ok((days, bursts))
}

/// Generate a single day (deterministic in `(cfg.seed, day)`).
pub fn generate_day(cfg: &SynthConfig, day: i64) -> Result<(SynthDay, Vec<Burst>)> {
    let mut rng = child_rng(cfg.seed, day as u64);
    let session = cfg.session_for_day(day);
    let per_unit = (1.0 / cfg.tick_size).round();

    // Burst placement: Poisson count, uniform starts, earliest-first with
    // overlaps dropped, sign by fair coin per kept burst.
    let mut bursts: Vec<Burst> = Vec::new();
    if cfg.burst_rate > 0.0 {
        let n_candidates = Poisson::new(cfg.burst_rate)
            .map_err(|e| Error::InvalidConfig {
                reason: format!("burst_rate: {e}"),
            })?
            .sample(&mut rng) as usize;
        let max_start = cfg.session_s - cfg.burst_len_s;
        let mut starts: Vec<i64> = (0..n_candidates)
            .map(|_| rng.gen_range(0..=max_start))
            .collect();
        starts.sort_unstable();
        for s in starts {
            let ok = bursts
                .last()
                .map_or(true, |b| s >= (b.start_s - session.open_s) + cfg.burst_len_s);
            if ok {
                bursts.push(Burst {
                    day,
                    start_s: session.open_s + s,
                    len_s: cfg.burst_len_s,
                    sign: if rng.gen_bool(0.5) { 1 } else { -1 },
                });
            }
        }
    }

    // Relative burst intervals for the arrival loop.
    let intervals: Vec<(f64, f64, i8)> = bursts
        .iter()
        .map(|b| {
            let s = (b.start_s - session.open_s) as f64;
            (s, s + b.len_s as f64, b.sign)
        })
        .collect();

    let exp_base = Exp::new(cfg.base_tick_rate).expect("positive rate");
    let burst_counts =
        Poisson::new(cfg.base_tick_rate * cfg.burst_rate_mult).expect("positive rate");
    let sizes = LogNormal::new(cfg.size_lognorm_mu, cfg.size_lognorm_sigma).map_err(|e| {
        Error::InvalidConfig {
            reason: format!("trade-size distribution: {e}"),
        }
    })?;

    let bp = cfg.start_price * 1e-4;
    let close_rel = cfg.session_s as f64;
    let expected = (cfg.base_tick_rate * close_rel * cfg.burst_rate_mult.max(1.0)) as usize;
    let mut ticks: Vec<TickRecord> = Vec::with_capacity(expected.min(4_000_000));
    let open_ns = session.open_s * NS_PER_S;

    // Alternating noise/burst segments covering [0, close).
    let mut segments: Vec<(f64, f64, Option<i8>)> = Vec::new();
    let mut cur = 0.0f64;
    for &(s, e, sign) in &intervals {
        if s > cur {
            segments.push((cur, s, None));
        }
        segments.push((s, e.min(close_rel), Some(sign)));
        cur = e;
    }
    if cur < close_rel {
        segments.push((cur, close_rel, None));
    }

    let mut m = cfg.start_price;
    let mut flow_sign: i8;
    let push = |m: f64, eps: i8, ts: f64, size: u32, ticks: &mut Vec<TickRecord>| {
        // Print price: latent plus bounce, rounded to the grid. Dividing the
        // integer tick count by 1/tick_size makes the stored f64 the
        // correctly-rounded decimal, so CSV round-trips are bit-exact.
        let latent = m + cfg.half_spread_ticks * cfg.tick_size * eps as f64;
        let grid = (latent / cfg.tick_size).round() as i64;
        let price = grid.max(1) as f64 / per_unit;
        if !(price > 0.0) {
            return Err(Error::Numerical {
                operation: "generate_day",
                reason: format!("non-positive price at day {day}, t {ts:.3}"),
            });
        }
        ticks.push(TickRecord {
            ts_ns: open_ns + (ts * 1e9).round() as i64,
            price,
            size,
        });
        Ok(())
    };

    for &(seg_s, seg_e, burst_sign) in &segments {
        match burst_sign {
            // Baseline regime: homogeneous Poisson arrivals, i.i.d. sides,
            // full diffusion, log-normal sizes.
            None => {
                let mut t = seg_s;
                loop {
                    let dt = exp_base.sample(&mut rng);
                    if t + dt >= seg_e {
                        break;
                    }
                    t += dt;
                    let eps: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m += bp * cfg.noise_vol_bps * dt.sqrt() * z + bp * cfg.impact_bps * eps as f64;
                    let raw: f64 = sizes.sample(&mut rng);
                    let size = raw.ceil().clamp(1.0, 1_000_000.0) as u32;
                    push(m, eps, t, size, &mut ticks)?;
                }
            }
            // Burst regime: the execution algorithm prints every second with
            // a fixed per-second volume split across a Poisson number of
            // child trades; sides persist; diffusion is damped; the drift
            // activates after the pinned phase.
            Some(sign) => {
                flow_sign = sign;
                let n_secs = (seg_e - seg_s).round() as i64;
                let mut last = seg_s;
                for k in 0..n_secs {
                    let sec = seg_s + k as f64;
                    let pinned = k < cfg.burst_drift_delay_s;
                    let vol_target = if pinned && rng.gen_bool(cfg.burst_pulse_prob) {
                        cfg.burst_pulse_volume
                    } else {
                        cfg.burst_bar_volume
                    };
                    // At least one print per second, and never more prints
                    // than shares so every child trade carries size >= 1.
                    let n = (burst_counts.sample(&mut rng) as u64)
                        .clamp(1, vol_target);
                    let mut tts: Vec<f64> = (0..n).map(|_| sec + rng.gen::<f64>()).collect();
                    tts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
                    let base = vol_target / n;
                    let rem = vol_target - base * n;
                    for (i, &tt) in tts.iter().enumerate() {
                        let keep = rng.gen_bool(cfg.burst_sign_persist);
                        let eps = if keep { flow_sign } else { -flow_sign };
                        flow_sign = eps;
                        let dt = tt - last;
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m += drift_move(cfg, bp, last, tt, seg_s, seg_e, sign)
                            + bp * cfg.noise_vol_bps * cfg.burst_pin_vol_factor * dt.sqrt() * z
                            + bp * cfg.impact_bps * eps as f64;
                        last = tt;
                        let size = (base + u64::from((i as u64) < rem)) as u32;
                        push(m, eps, tt, size, &mut ticks)?;
                    }
                }
                // Accrue the drift between the last print and the burst end
                // so the post-burst latent carries the full move.
                m += drift_move(cfg, bp, last, seg_e, seg_s, seg_e, sign);
            }
        }
    }

    Ok((SynthDay { day, session, ticks }, bursts))
}

/// Drift accrued over `[t0, t1]` inside burst `[s, e)` with activation
/// delayed by `burst_drift_delay_s` after the burst start.
fn drift_move(cfg: &SynthConfig, bp: f64, t0: f64, t1: f64, s: f64, e: f64, sign: i8) -> f64 {
    let active_from = s + cfg.burst_drift_delay_s as f64;
    let span = (t1.min(e) - t0.max(active_from)).max(0.0);
    sign as f64 * cfg.burst_drift_bps_per_s * span * bp
}

// =========================================================================
// Ground-truth detection report
// =========================================================================

/// Entropy vs ground truth: how the low-entropy tail lines up with bursts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_points: usize,
    pub n_inside: usize,
    pub n_outside: usize,
    pub mean_h_inside: Option<f64>,
    pub mean_h_outside: Option<f64>,
    /// 5th percentile of all defined entropy.
    pub low_h_threshold: Option<f64>,
    pub n_low: usize,
    pub n_low_inside: usize,
    /// Fraction of sub-threshold seconds that fall inside bursts.
    pub precision_low_inside: Option<f64>,
    /// Fraction of all points inside bursts (the base rate a random
    /// detector would achieve).
    pub base_rate_inside: f64,
}

/// Compare defined entropy points `(ts_s, h)` with the burst log.
pub fn oracle_report(points: &[(i64, f64)], bursts: &[Burst]) -> Result<OracleReport> {
    if points.is_empty() {
        return Err(Error::InsufficientData {
            what: "defined entropy points".into(),
            needed: 1,
            available: 0,
        });
    }
    let inside = |ts: i64| bursts.iter().any(|b| b.contains(ts));
    let mut h_in = Vec::new();
    let mut h_out = Vec::new();
    for &(ts, h) in points {
        if inside(ts) {
            h_in.push(h);
        } else {
            h_out.push(h);
        }
    }
    let all: Vec<f64> = points.iter().map(|&(_, h)| h).collect();
    let low_h_threshold = if all.len() >= 2 {
        Some(percentile_linear(&sorted_for_percentile(all)?, 0.05)?)
    } else {
        None
    };
    let (n_low, n_low_inside) = match low_h_threshold {
        Some(thr) => {
            let low: Vec<&(i64, f64)> = points.iter().filter(|&&(_, h)| h < thr).collect();
            let n_li = low.iter().filter(|&&&(ts, _)| inside(ts)).count();
            (low.len(), n_li)
        }
        None => (0, 0),
    };
    Ok(OracleReport {
        n_points: points.len(),
        n_inside: h_in.len(),
        n_outside: h_out.len(),
        mean_h_inside: mean(&h_in),
        mean_h_outside: mean(&h_out),
        low_h_threshold,
        n_low,
        n_low_inside,
        precision_low_inside: if n_low > 0 {
            Some(n_low_inside as f64 / n_low as f64)
        } else {
            None
        },
        base_rate_inside: h_in.len() as f64 / points.len() as f64,
    })
}
