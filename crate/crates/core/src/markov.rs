//! The 15-state market-state Markov chain.
//!
//! Each second-bar after the first maps to a state combining the sign of the
//! close-to-close price change (−1 / 0 / +1) with the bar's volume quintile
//! (1..=5) measured against the trailing window, giving 3 × 5 = 15 states.
//! Transition matrices are estimated from consecutive state pairs inside a
//! rolling window, the stationary distribution is found by power iteration,
//! and the normalized entropy
//!
//! ```text
//! H = −(1 / ln 15) Σ_i π_i Σ_j p_ij ln p_ij ∈ [0, 1]
//! ```
//!
//! is the quantity everything downstream conditions on. Entropy is invariant
//! under any relabelling of the 15 states — in particular under swapping the
//! buy/sell sign — which is why a low reading can predict the *size* of a
//! move while carrying no information about its direction.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ingest::SecondBar;
use crate::numerics::neumaier_sum;
use crate::tolerances::{POWER_ITER_MAX, POWER_ITER_TOL, ROW_SUM_TOL};

/// Number of market states: 3 price-change signs × 5 volume quintiles.
pub const N_STATES: usize = 15;

// =========================================================================
// State encoding
// =========================================================================

/// One market state: (price-change sign, volume quintile).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MarketState {
    sign: i8,
    quintile: u8,
}

impl MarketState {
    /// Construct a state, rejecting out-of-range fields.
    pub fn new(sign: i8, quintile: u8) -> Result<Self> {
        if !(-1..=1).contains(&sign) {
            return Err(Error::InvalidArgument {
                operation: "MarketState::new",
                reason: format!("sign must be -1, 0 or +1, got {sign}"),
            });
        }
        if !(1..=5).contains(&quintile) {
            return Err(Error::InvalidArgument {
                operation: "MarketState::new",
                reason: format!("quintile must lie in 1..=5, got {quintile}"),
            });
        }
        Ok(MarketState { sign, quintile })
    }

    /// Dense index in `0..15`: `(sign + 1) * 5 + (quintile − 1)`.
    pub fn index(self) -> usize {
        (self.sign + 1) as usize * 5 + (self.quintile - 1) as usize
    }

    /// Inverse of [`MarketState::index`].
    pub fn from_index(index: usize) -> Result<Self> {
        if index >= N_STATES {
            return Err(Error::InvalidArgument {
                operation: "MarketState::from_index",
                reason: format!("index must lie in 0..15, got {index}"),
            });
        }
        Ok(MarketState {
            sign: (index / 5) as i8 - 1,
            quintile: (index % 5) as u8 + 1,
        })
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn quintile(self) -> u8 {
        self.quintile
    }

    /// The same state with the buy/sell side flipped (sign negated).
    pub fn flipped_side(self) -> Self {
        MarketState {
            sign: -self.sign,
            quintile: self.quintile,
        }
    }
}

/// A timestamped market state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StatePoint {
    pub ts_s: i64,
    pub state: MarketState,
}

/// Encode one session's bars into market states.
///
/// The first bar has no predecessor and yields no state, so the output has
/// `bars.len() − 1` entries and entry `i` corresponds to `bars[i + 1]`.
/// The price-change sign compares consecutive bars even across quiet-second
/// gaps. The volume quintile is `ceil(5 · F(V))` where `F` is the empirical
/// CDF (proportion ≤ V, ties counted) over bars in `(ts − window_s, ts]`
/// including the current bar; a constant-volume window therefore lands in
/// quintile 5.
pub fn encode_states(bars: &[SecondBar], window_s: i64) -> Result<Vec<StatePoint>> {
    if window_s <= 0 {
        return Err(Error::InvalidArgument {
            operation: "encode_states",
            reason: format!("window_s must be positive, got {window_s}"),
        });
    }
    for w in bars.windows(2) {
        if w[1].ts_s <= w[0].ts_s {
            return Err(Error::InvalidArgument {
                operation: "encode_states",
                reason: format!(
                    "bars must be strictly increasing in ts_s ({} then {})",
                    w[0].ts_s, w[1].ts_s
                ),
            });
        }
    }
    let mut out = Vec::with_capacity(bars.len().saturating_sub(1));
    let mut lo = 0usize;
    for i in 1..bars.len() {
        let ts = bars[i].ts_s;
        while bars[lo].ts_s <= ts - window_s {
            lo += 1;
        }
        let v = bars[i].volume;
        let mut le = 0u64;
        let total = (i - lo + 1) as u64;
        for b in &bars[lo..=i] {
            if b.volume <= v {
                le += 1;
            }
        }
        // ceil(5 · le / total) in exact integer arithmetic; le ≥ 1 because
        // the current bar counts itself, so the quintile is always in 1..=5.
        let quintile = ((5 * le + total - 1) / total) as u8;
        let sign = match bars[i].close.partial_cmp(&bars[i - 1].close) {
            Some(Ordering::Greater) => 1,
            Some(Ordering::Less) => -1,
            Some(Ordering::Equal) => 0,
            None => {
                return Err(Error::InvalidArgument {
                    operation: "encode_states",
                    reason: format!("non-finite close at ts_s {ts}"),
                })
            }
        };
        out.push(StatePoint {
            ts_s: ts,
            state: MarketState::new(sign, quintile)?,
        });
    }
    Ok(out)
}

// =========================================================================
// Transition matrices
// =========================================================================

/// Row-stochastic transition matrix over the 15 states, together with the
/// raw counts it was estimated from.
///
/// Rows with zero observations fall back to the uniform row (each entry
/// 1/15); all other rows are count-normalized. Row sums are within
/// [`ROW_SUM_TOL`] of 1 by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    counts: [[u32; N_STATES]; N_STATES],
    probs: [[f64; N_STATES]; N_STATES],
    /// Right edge of the estimation window `(window_end_s − window_s,
    /// window_end_s]`.
    pub window_end_s: i64,
    /// Total transitions observed in the window.
    pub n_transitions: u32,
}

impl TransitionMatrix {
    /// Build a matrix from transition counts.
    pub fn from_counts(counts: [[u32; N_STATES]; N_STATES], window_end_s: i64) -> Self {
        let mut probs = [[0.0f64; N_STATES]; N_STATES];
        let mut n_transitions = 0u32;
        for i in 0..N_STATES {
            let row_n: u64 = counts[i].iter().map(|&c| c as u64).sum();
            n_transitions += row_n as u32;
            if row_n == 0 {
                probs[i] = [1.0 / N_STATES as f64; N_STATES];
            } else {
                for j in 0..N_STATES {
                    probs[i][j] = counts[i][j] as f64 / row_n as f64;
                }
            }
            debug_assert!(
                (neumaier_sum(probs[i].iter().copied()) - 1.0).abs() <= ROW_SUM_TOL,
                "row {i} not stochastic"
            );
        }
        TransitionMatrix {
            counts,
            probs,
            window_end_s,
            n_transitions,
        }
    }

    pub fn counts(&self) -> &[[u32; N_STATES]; N_STATES] {
        &self.counts
    }

    pub fn probs(&self) -> &[[f64; N_STATES]; N_STATES] {
        &self.probs
    }

    /// Relabel the states: entry `(i, j)` of the result is entry
    /// `(σ⁻¹ i, σ⁻¹ j)` of `self`, i.e. counts move to `(σ i, σ j)`.
    pub fn permuted(&self, sigma: &[usize; N_STATES]) -> Result<Self> {
        validate_permutation(sigma)?;
        let mut counts = [[0u32; N_STATES]; N_STATES];
        for i in 0..N_STATES {
            for j in 0..N_STATES {
                counts[sigma[i]][sigma[j]] = self.counts[i][j];
            }
        }
        Ok(TransitionMatrix::from_counts(counts, self.window_end_s))
    }
}

fn validate_permutation(sigma: &[usize; N_STATES]) -> Result<()> {
    let mut seen = [false; N_STATES];
    for &s in sigma {
        if s >= N_STATES || seen[s] {
            return Err(Error::InvalidArgument {
                operation: "permutation",
                reason: "sigma is not a permutation of 0..15".into(),
            });
        }
        seen[s] = true;
    }
    Ok(())
}

/// Transport a distribution along a state relabelling: `out[σ i] = pi[i]`.
pub fn permute_dist(pi: &[f64; N_STATES], sigma: &[usize; N_STATES]) -> [f64; N_STATES] {
    let mut out = [0.0; N_STATES];
    for i in 0..N_STATES {
        out[sigma[i]] = pi[i];
    }
    out
}

/// The relabelling that swaps the buy/sell side: `(sign, q) → (−sign, q)`.
/// An involution; entropy must be invariant under it, which is the formal
/// reason the signal is direction-blind.
pub fn side_swap_permutation() -> [usize; N_STATES] {
    let mut sigma = [0usize; N_STATES];
    for (i, slot) in sigma.iter_mut().enumerate() {
        let s = MarketState::from_index(i).expect("index in range");
        *slot = s.flipped_side().index();
    }
    sigma
}

/// Estimate the transition matrix at time `t` from consecutive state pairs
/// whose *later* element falls in `(t − window_s, t]`.
pub fn estimate_transitions(
    states: &[StatePoint],
    t: i64,
    window_s: i64,
) -> Result<TransitionMatrix> {
    if window_s <= 0 {
        return Err(Error::InvalidArgument {
            operation: "estimate_transitions",
            reason: format!("window_s must be positive, got {window_s}"),
        });
    }
    let mut counts = [[0u32; N_STATES]; N_STATES];
    for k in 1..states.len() {
        let ts = states[k].ts_s;
        if ts > t - window_s && ts <= t {
            counts[states[k - 1].state.index()][states[k].state.index()] += 1;
        }
    }
    Ok(TransitionMatrix::from_counts(counts, t))
}

// =========================================================================
// Stationary distribution
// =========================================================================

/// Stationary distribution of a transition matrix, with solve diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct StationaryDist {
    pub pi: [f64; N_STATES],
    /// Final L1 residual `‖πP − π‖₁`.
    pub residual: f64,
    /// Whether the residual reached [`POWER_ITER_TOL`] within
    /// [`POWER_ITER_MAX`] iterations. Non-convergence is a flag for the
    /// caller, never a panic.
    pub converged: bool,
    pub iterations: u32,
}

fn matvec_left(probs: &[[f64; N_STATES]; N_STATES], x: &[f64; N_STATES]) -> [f64; N_STATES] {
    let mut y = [0.0f64; N_STATES];
    for i in 0..N_STATES {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        let row = &probs[i];
        for j in 0..N_STATES {
            y[j] += xi * row[j];
        }
    }
    y
}

fn l1_diff(a: &[f64; N_STATES], b: &[f64; N_STATES]) -> f64 {
    neumaier_sum((0..N_STATES).map(|i| (a[i] - b[i]).abs()))
}

/// Power iteration for the stationary distribution, starting from the
/// uniform vector, renormalizing each step, and stopping when
/// `‖πP − π‖₁ ≤ 1e-10` or after 10,000 iterations.
pub fn stationary(p: &TransitionMatrix) -> StationaryDist {
    let probs = &p.probs;
    let mut x = [1.0 / N_STATES as f64; N_STATES];
    let mut last_residual = f64::INFINITY;
    for iter in 0..POWER_ITER_MAX {
        let y = matvec_left(probs, &x);
        let residual = l1_diff(&y, &x);
        if residual <= POWER_ITER_TOL {
            return StationaryDist {
                pi: x,
                residual,
                converged: true,
                iterations: iter,
            };
        }
        last_residual = residual;
        let s = neumaier_sum(y.iter().copied());
        debug_assert!(s > 0.0 && s.is_finite());
        for j in 0..N_STATES {
            x[j] = y[j] / s;
        }
    }
    StationaryDist {
        pi: x,
        residual: last_residual,
        converged: false,
        iterations: POWER_ITER_MAX,
    }
}

// =========================================================================
// Entropy
// =========================================================================

/// Normalized transition entropy `H ∈ [0, 1]`.
///
/// `H = −(1 / ln 15) Σ_i π_i Σ_j p_ij ln p_ij`, with the convention
/// `0 · ln 0 = 0`. Sums are compensated and the π-weighted average is
/// normalized by `Σ π` so the result is exact for analytic cases (uniform
/// matrix → 1, deterministic rows → 0) and insensitive to last-bit drift in
/// the solver's renormalisation.
pub fn entropy(p: &TransitionMatrix, pi: &[f64; N_STATES]) -> f64 {
    let ln_k = (N_STATES as f64).ln();
    let num = neumaier_sum((0..N_STATES).map(|i| {
        let row = &p.probs[i];
        let h_row = neumaier_sum(
            row.iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| q * q.ln()),
        );
        pi[i] * h_row
    }));
    let den = neumaier_sum(pi.iter().copied());
    debug_assert!(den > 0.0 && den.is_finite(), "pi must have positive mass");
    (-(num / den) / ln_k).clamp(0.0, 1.0)
}

// =========================================================================
// Rolling entropy series
// =========================================================================

/// One second of the entropy series.
///
/// `h` is `None` during warm-up (fewer than `min_transitions` transitions in
/// the window). `converged` records the stationary solve; a `false` value
/// flags the point for the caller but does not un-define it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyPoint {
    pub ts_s: i64,
    pub h: Option<f64>,
    pub n_transitions: u32,
    pub converged: bool,
}

/// Rolling entropy over one session's bars.
///
/// Emits one point per state-bearing bar (i.e. per bar except the session's
/// first; point `i` corresponds to `bars[i + 1]`). At each point the
/// transition matrix over `(ts − window_s, ts]` is estimated incrementally;
/// the counts are identical to a fresh [`estimate_transitions`] call at that
/// timestamp. Sessions must be processed one at a time so windows never
/// cross session boundaries.
pub fn entropy_series(
    bars: &[SecondBar],
    window_s: i64,
    min_transitions: u32,
) -> Result<Vec<EntropyPoint>> {
    let states = encode_states(bars, window_s)?;
    let mut counts = [[0u32; N_STATES]; N_STATES];
    let mut in_window = 0u32;
    let mut evict = 1usize; // next transition index (by later element) to evict
    let mut out = Vec::with_capacity(states.len());
    for i in 0..states.len() {
        let ts = states[i].ts_s;
        if i >= 1 {
            counts[states[i - 1].state.index()][states[i].state.index()] += 1;
            in_window += 1;
        }
        while evict <= i && states[evict].ts_s <= ts - window_s {
            counts[states[evict - 1].state.index()][states[evict].state.index()] -= 1;
            in_window -= 1;
            evict += 1;
        }
        if in_window < min_transitions {
            out.push(EntropyPoint {
                ts_s: ts,
                h: None,
                n_transitions: in_window,
                converged: true,
            });
            continue;
        }
        let matrix = TransitionMatrix::from_counts(counts, ts);
        let st = stationary(&matrix);
        out.push(EntropyPoint {
            ts_s: ts,
            h: Some(entropy(&matrix, &st.pi)),
            n_transitions: in_window,
            converged: st.converged,
        });
    }
    Ok(out)
}

// =========================================================================
// Tests
// =========================================================================
