//! Percentiles and hypothesis tests: linear-interpolation percentiles,
//! Welch's unequal-variance t-test, and the two-sided binomial direction
//! test (normal approximation plus exact tail sum).

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::{mean, neumaier_sum, sample_variance};

/// Sort values ascending for percentile queries, rejecting non-finite input.
pub fn sorted_for_percentile(mut values: Vec<f64>) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            operation: "sorted_for_percentile",
            reason: "values must be finite".into(),
        });
    }
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(values)
}

/// Inclusive linear-interpolation percentile of an ascending-sorted sample:
/// the value at fractional order-statistic index `p · (n − 1)`.
pub fn percentile_linear(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidArgument {
            operation: "percentile_linear",
            reason: "empty sample".into(),
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument {
            operation: "percentile_linear",
            reason: format!("percentile must lie in [0, 1], got {p}"),
        });
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument {
            operation: "percentile_linear",
            reason: "sample is not sorted ascending".into(),
        });
    }
    let idx = p * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let frac = idx - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        return Ok(sorted[lo]);
    }
    Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
}

/// Result of Welch's t-test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance t-test, two-sided.
///
/// Degenerate case: both samples have zero variance. With equal means the
/// test is vacuous (`t = 0, p = 1`); with unequal means the statistic is
/// undefined and an error is returned.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData {
            what: "welch_t sample".into(),
            needed: 2,
            available: a.len().min(b.len()),
        });
    }
    let (ma, mb) = (mean(a).expect("non-empty"), mean(b).expect("non-empty"));
    let (va, vb) = (
        sample_variance(a).expect("n >= 2"),
        sample_variance(b).expect("n >= 2"),
    );
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    if sa + sb == 0.0 {
        if ma == mb {
            return Ok(WelchTest {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
            });
        }
        return Err(Error::Numerical {
            operation: "welch_t",
            reason: "zero variance in both samples with unequal means".into(),
        });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical {
        operation: "welch_t",
        reason: format!("t-distribution with df {df}: {e}"),
    })?;
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(WelchTest { t, df, p })
}

/// Result of the two-sided binomial test against p = 1/2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialTest {
    /// Normal-approximation statistic `(k − n/2) / √(n/4)`.
    pub z: f64,
    /// Two-sided normal-approximation p-value.
    pub p_normal: f64,
    /// Exact two-sided p-value `min(1, 2 · P(X ≤ min(k, n − k)))`.
    pub p_exact: f64,
}

/// Two-sided binomial test of `k` successes in `n` trials against 1/2.
pub fn binomial_direction(k: u64, n: u64) -> Result<BinomialTest> {
    if n == 0 || k > n {
        return Err(Error::InvalidArgument {
            operation: "binomial_direction",
            reason: format!("need 0 <= k <= n with n >= 1, got k={k}, n={n}"),
        });
    }
    let nf = n as f64;
    let z = (k as f64 - nf / 2.0) / (nf / 4.0).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p_normal = (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0);
    let binom = Binomial::new(0.5, n).expect("p = 1/2");
    let tail = k.min(n - k);
    let p_exact = (2.0 * binom.cdf(tail)).clamp(0.0, 1.0);
    Ok(BinomialTest { z, p_normal, p_exact })
}

/// The placebo z-score `(observed − null mean) / null sd`, or `None` when
/// the null distribution is degenerate (sd below 1e-12).
pub fn placebo_z(observed: f64, null_mean: f64, null_sd: f64) -> Option<f64> {
    if null_sd < 1e-12 {
        None
    } else {
        Some((observed - null_mean) / null_sd)
    }
}

/// Mean of a slice via compensated summation; panics on empty input.
pub fn mean_or_panic(xs: &[f64]) -> f64 {
    mean(xs).expect("non-empty sample")
}

/// Total of a slice via compensated summation.
pub fn total(xs: &[f64]) -> f64 {
    neumaier_sum(xs.iter().copied())
}
