//! Per-day bundles of session bars and their entropy series.

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::ingest::{SecondBar, SessionSpec};
use crate::markov::{entropy_series, EntropyPoint};

/// Seconds per calendar day.
pub const S_PER_DAY: i64 = 86_400;

/// The calendar day an epoch-second timestamp falls in.
pub fn day_of_ts(ts_s: i64) -> i64 {
    ts_s.div_euclid(S_PER_DAY)
}

/// One trading day: session spec, second bars, and the rolling entropy
/// series aligned to `bars[1..]`.
#[derive(Clone, Debug)]
pub struct DaySeries {
    pub day: i64,
    pub session: SessionSpec,
    pub bars: Vec<SecondBar>,
    pub entropy: Vec<EntropyPoint>,
}

impl DaySeries {
    /// Build a day from its bars, computing the entropy series.
    pub fn from_bars(
        day: i64,
        session: SessionSpec,
        bars: Vec<SecondBar>,
        cfg: &EngineConfig,
    ) -> Result<Self> {
        if let (Some(first), Some(last)) = (bars.first(), bars.last()) {
            if first.ts_s < session.open_s || last.ts_s >= session.close_s {
                return Err(Error::InvalidArgument {
                    operation: "DaySeries::from_bars",
                    reason: format!(
                        "bars [{}, {}] fall outside session [{}, {})",
                        first.ts_s, last.ts_s, session.open_s, session.close_s
                    ),
                });
            }
        }
        let entropy = entropy_series(&bars, cfg.window_s, cfg.min_transitions)?;
        Ok(DaySeries {
            day,
            session,
            bars,
            entropy,
        })
    }

    pub fn first_ts(&self) -> Option<i64> {
        self.bars.first().map(|b| b.ts_s)
    }

    pub fn last_ts(&self) -> Option<i64> {
        self.bars.last().map(|b| b.ts_s)
    }

    /// Number of defined entropy points.
    pub fn n_defined(&self) -> usize {
        self.entropy.iter().filter(|p| p.h.is_some()).count()
    }

    /// Whether any point's stationary solve failed to converge.
    pub fn has_unconverged(&self) -> bool {
        self.entropy.iter().any(|p| !p.converged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_of_ts_handles_negatives_and_boundaries() {
        assert_eq!(day_of_ts(0), 0);
        assert_eq!(day_of_ts(S_PER_DAY - 1), 0);
        assert_eq!(day_of_ts(S_PER_DAY), 1);
        assert_eq!(day_of_ts(-1), -1);
        assert_eq!(day_of_ts(35 * S_PER_DAY + 34_200), 35);
    }

    #[test]
    fn from_bars_validates_session_bounds() {
        let cfg = EngineConfig::default();
        let session = SessionSpec::new(100, 200).unwrap();
        let inside: Vec<SecondBar> = (100..150)
            .map(|ts_s| SecondBar { ts_s, close: 100.0, volume: 5 })
            .collect();
        let ds = DaySeries::from_bars(0, session, inside.clone(), &cfg).unwrap();
        assert_eq!(ds.entropy.len(), inside.len() - 1);

        let mut outside = inside;
        outside.push(SecondBar { ts_s: 205, close: 100.0, volume: 5 });
        assert!(DaySeries::from_bars(0, session, outside, &cfg).is_err());
    }
}
