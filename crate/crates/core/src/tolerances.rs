//! Numeric contract constants shared by the implementation and the test
//! suites.
//!
//! Every tolerance that appears in a public behavioural guarantee lives here
//! so that the implementation and the acceptance tests cannot silently
//! drift apart.

/// L1 residual `‖πP − π‖₁` at which power iteration declares convergence.
pub const POWER_ITER_TOL: f64 = 1e-10;

/// Iteration cap for power iteration. Hitting the cap is reported via
/// [`crate::markov::StationaryDist::converged`], never as a panic or error.
pub const POWER_ITER_MAX: u32 = 10_000;

/// Row-stochasticity tolerance: every row of a transition-probability matrix
/// must sum to 1 within this bound.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Agreement required between power iteration and a direct linear solve of
/// the stationary equations (max elementwise difference).
pub const LINSOLVE_AGREE_TOL: f64 = 1e-8;

/// Entropy must be invariant under a relabelling of the 15 states when the
/// stationary distribution is transported by the same permutation.
pub const PERM_INVARIANCE_TOL: f64 = 1e-12;

/// Round-trip cost of one trade in basis points under the default cost
/// model: half-spread paid at entry and exit, plus slippage, plus fees.
pub const DEFAULT_ROUND_TRIP_BPS: f64 = 0.57;

/// Tolerance on the cost-model identity `2·half_spread + slippage + fees`.
pub const COST_SUM_TOL: f64 = 1e-12;
