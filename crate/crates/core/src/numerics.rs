//! Small numeric primitives: compensated summation and moment helpers.

/// Compensated (Neumaier) summation.
///
/// Returns the correctly-rounded sum far more often than naive left-to-right
/// accumulation; in particular `neumaier_sum` of fifteen copies of `1.0/15.0`
/// is exactly `1.0`. Used wherever a sum feeds a normalisation that must hit
/// an exact analytic value (entropy normalisation, stationary renorms).
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Sample mean. Returns `None` on an empty slice.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(neumaier_sum(xs.iter().copied()) / xs.len() as f64)
}

/// Unbiased sample variance (n−1 denominator). Returns `None` for n < 2.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss = neumaier_sum(xs.iter().map(|x| {
        let d = x - m;
        d * d
    }));
    Some(ss / (xs.len() - 1) as f64)
}

/// Population standard deviation (n denominator), used for placebo null
/// spreads where the trials *are* the population of interest.
pub fn population_sd(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let m = mean(xs)?;
    let ss = neumaier_sum(xs.iter().map(|x| {
        let d = x - m;
        d * d
    }));
    Some((ss / xs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_exact_uniform_sum() {
        // Naive summation of 15 copies of 1/15 loses the last bit; the
        // compensated sum must not.
        let p = 1.0f64 / 15.0;
        let naive: f64 = (0..15).map(|_| p).sum();
        assert_ne!(naive, 1.0);
        assert_eq!(neumaier_sum((0..15).map(|_| p)), 1.0);
    }

    #[test]
    fn neumaier_matches_naive_on_benign_input() {
        let xs = [1.0, 2.0, 3.5, -0.25];
        assert_eq!(neumaier_sum(xs.iter().copied()), 6.25);
    }

    #[test]
    fn moments_small_cases() {
        assert_eq!(mean(&[]), None);
        assert_eq!(mean(&[2.0, 4.0]), Some(3.0));
        assert_eq!(sample_variance(&[1.0]), None);
        // var of {1,2,3,4} with n−1 = 5/3
        let v = sample_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        let sd = population_sd(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(sd, 0.0);
    }
}
