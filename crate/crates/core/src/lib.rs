//! flowentropy: a tick-to-signal research engine.
//!
//! The pipeline turns raw trade ticks into second bars, encodes each second
//! as one of 15 market states (price-change sign × volume quintile),
//! estimates rolling transition matrices, and computes normalized
//! stationary-weighted entropy. Low entropy with elevated volume and a
//! moderate trailing move defines an entry signal; an asymmetric
//! stop/take-profit/timeout rule prices it; walk-forward folds, placebo
//! batteries, profit attribution, and a parameter sweep validate that the
//! signal predicts the *size* of moves and not their direction. A synthetic
//! informed/noise-trader market provides ground truth for all of it.
//!
//! Modules:
//! - [`ingest`]: tick CSV parsing, session filtering, second-bar aggregation
//! - [`markov`]: state encoding, transition matrices, stationary
//!   distributions, entropy
//! - [`series`]: per-day bar + entropy bundles
//! - [`signal`]: threshold calibration and signal generation
//! - [`backtest`]: the event-driven trading rule and fold pooling
//! - [`stats`]: percentiles, Welch's t, binomial direction test
//! - [`walkforward`]: fold construction and orchestration
//! - [`validate`]: magnitude stats, placebos, attribution, sensitivity sweep
//! - [`synth`]: the synthetic market generator and its ground-truth oracle
//! - [`report`]: artifact readers/writers (CSV/JSON)
//! - [`parallel`]: deterministic rayon/sequential fan-out
//! - [`numerics`], [`rng`], [`stats`], [`tolerances`], [`error`], [`config`]:
//!   shared plumbing

pub mod backtest;
pub mod config;
pub mod error;
pub mod ingest;
pub mod markov;
pub mod numerics;
pub mod parallel;
pub mod report;
pub mod rng;
pub mod series;
pub mod signal;
pub mod stats;
pub mod synth;
pub mod tolerances;
pub mod validate;
pub mod walkforward;

pub use config::EngineConfig;
pub use error::{Error, ErrorCategory, Result};
