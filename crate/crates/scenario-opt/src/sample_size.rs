//! Exact binomial-tail sample bounds and their inversion.
//!
//! The tail `sum_{i<n} C(N,i) eps^i (1-eps)^(N-i)` is evaluated in log space
//! (log-gamma binomials, compensated summation) so that counts in the tens of
//! thousands with dozens of terms stay accurate to ~1e-12 relative. Inversion
//! uses exponential then binary search over N, relying on the tail being
//! non-increasing in N; the returned boundary is re-verified locally.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleSizeError {
    #[error("violation level must lie in [0, 1], got {0}")]
    InvalidEpsilon(f64),
    #[error("confidence parameter must lie in (0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("at least one violation level is required")]
    EmptyLevels,
    #[error("no finite sample count satisfies the bound (unachievable)")]
    Unachievable,
    #[error("required sample count exceeds {0}")]
    OutOfRange(u64),
}

const SEARCH_LIMIT: u64 = 1 << 40;

/// `ln Gamma(x)` for `x > 0`, Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(x: f64) -> f64 {
    const COEFFICIENTS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut series = 0.999_999_999_999_809_93;
    for (i, &c) in COEFFICIENTS.iter().enumerate() {
        series += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// `ln C(n, k)` via log-gamma.
fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

#[derive(Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Binomial tail `sum_{i=0}^{min(dimension, trials+1)-1} C(trials, i) eps^i (1-eps)^(trials-i)`.
///
/// For `trials < dimension` the sum truncates at `i = trials` and equals 1.
pub fn binomial_tail(trials: u64, dimension: u64, eps: f64) -> f64 {
    assert!(trials >= 1, "tail needs at least one trial");
    assert!(dimension >= 1, "decision dimension must be at least 1");
    assert!((0.0..=1.0).contains(&eps), "violation level must lie in [0, 1]");

    let terms = dimension.min(trials + 1);
    if eps == 0.0 {
        return 1.0;
    }
    if trials + 1 <= dimension {
        // The truncated sum runs over every i and is the full binomial sum.
        return 1.0;
    }
    if eps == 1.0 {
        // Only the i = trials term survives, which the truncation excludes.
        return 0.0;
    }

    let ln_eps = eps.ln();
    let ln_complement = (-eps).ln_1p();
    let mut total = KahanSum::default();
    for i in 0..terms {
        let ln_term =
            ln_choose(trials, i) + i as f64 * ln_eps + (trials - i) as f64 * ln_complement;
        total.add(ln_term.exp());
    }
    total.sum.clamp(0.0, 1.0)
}

fn validate(eps: f64, beta: f64) -> Result<(), SampleSizeError> {
    if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
        return Err(SampleSizeError::InvalidEpsilon(eps));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(SampleSizeError::InvalidBeta(beta));
    }
    Ok(())
}

/// Minimal `N >= 1` with `binomial_tail(N, dimension, eps) <= beta`.
pub fn sample_size(eps: f64, beta: f64, dimension: u64) -> Result<u64, SampleSizeError> {
    validate(eps, beta)?;
    assert!(dimension >= 1, "decision dimension must be at least 1");
    if eps == 0.0 {
        // The tail is identically 1.
        return if beta >= 1.0 {
            Ok(1)
        } else {
            Err(SampleSizeError::Unachievable)
        };
    }
    invert(|n| binomial_tail(n, dimension, eps), beta)
}

/// Minimal `N` with `sum_k binomial_tail(N, dimension, eps_k) <= beta`,
/// the union-of-subprograms bound.
pub fn sample_size_union(
    levels: &[f64],
    beta: f64,
    dimension: u64,
) -> Result<u64, SampleSizeError> {
    if levels.is_empty() {
        return Err(SampleSizeError::EmptyLevels);
    }
    for &eps in levels {
        if !(0.0..=1.0).contains(&eps) || eps.is_nan() {
            return Err(SampleSizeError::InvalidEpsilon(eps));
        }
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(SampleSizeError::InvalidBeta(beta));
    }
    if levels.iter().any(|&eps| eps == 0.0) {
        // A zero level pins its term at 1 for every N.
        return if levels.len() == 1 && beta >= 1.0 {
            Ok(1)
        } else {
            Err(SampleSizeError::Unachievable)
        };
    }
    let tail = |n: u64| {
        let mut total = KahanSum::default();
        for &eps in levels {
            total.add(binomial_tail(n, dimension, eps));
        }
        total.sum
    };
    invert(tail, beta)
}

/// Exponential then binary search for the smallest `N` with `tail(N) <= beta`,
/// finished by a local walk that re-verifies the boundary.
fn invert(tail: impl Fn(u64) -> f64, beta: f64) -> Result<u64, SampleSizeError> {
    let satisfied = |n: u64| tail(n) <= beta;

    let mut hi = 1u64;
    while !satisfied(hi) {
        if hi >= SEARCH_LIMIT {
            return Err(SampleSizeError::OutOfRange(SEARCH_LIMIT));
        }
        hi = (hi * 2).min(SEARCH_LIMIT);
    }
    let mut lo = hi / 2; // tail(lo) > beta (or lo = 0)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if satisfied(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Floating-point monotonicity guard at the boundary.
    let mut n = hi;
    while n > 1 && satisfied(n - 1) {
        n -= 1;
    }
    while !satisfied(n) {
        n += 1;
        if n > SEARCH_LIMIT {
            return Err(SampleSizeError::OutOfRange(SEARCH_LIMIT));
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{One, Zero};
    use num::ToPrimitive;
    use proptest::prelude::*;

    /// Exact rational tail: f64 inputs are dyadic rationals, so the sum is
    /// computed without rounding and only the final conversion is inexact.
    fn rational_tail(trials: u64, dimension: u64, eps: f64) -> f64 {
        let eps = BigRational::from_float(eps).unwrap();
        let one = BigRational::one();
        let complement = &one - &eps;
        let mut total = BigRational::zero();
        let mut choose = BigInt::one();
        for i in 0..dimension.min(trials + 1) {
            if i > 0 {
                choose = choose * BigInt::from(trials - i + 1) / BigInt::from(i);
            }
            let term = BigRational::from_integer(choose.clone())
                * eps.pow(i as i32)
                * complement.pow((trials - i) as i32);
            total += term;
        }
        total.to_f64().unwrap()
    }

    /// Linear scan oracle for the minimal N, usable for small answers.
    fn scan_sample_size(eps: f64, beta: f64, dimension: u64, limit: u64) -> Option<u64> {
        (1..=limit).find(|&n| binomial_tail(n, dimension, eps) <= beta)
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut factorial = 1.0_f64;
        for k in 1..20 {
            assert!(
                (ln_gamma(k as f64 + 1.0) - factorial.ln()).abs() < 1e-11,
                "k = {k}"
            );
            factorial *= (k + 1) as f64;
        }
    }

    #[test]
    fn single_term_tail() {
        assert!((binomial_tail(2, 1, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_term_closed_form_agrees_with_summation() {
        let n = 60u64;
        let eps = 0.1_f64;
        let closed = (1.0 - eps).powi(60) + 60.0 * eps * (1.0 - eps).powi(59);
        assert!((binomial_tail(n, 2, eps) - closed).abs() < 1e-12);
    }

    #[test]
    fn small_tail_matches_exact_rational_value() {
        let expected = rational_tail(10, 2, 0.1);
        assert!((expected - 0.7360989291).abs() < 1e-10);
        assert!((binomial_tail(10, 2, 0.1) - expected).abs() < 1e-12);
    }

    #[test]
    fn truncated_tail_is_one_below_dimension() {
        assert_eq!(binomial_tail(3, 10, 0.3), 1.0);
        assert_eq!(binomial_tail(1, 2, 0.7), 1.0);
    }

    #[test]
    fn eps_endpoints() {
        assert_eq!(binomial_tail(50, 3, 0.0), 1.0);
        assert_eq!(binomial_tail(50, 3, 1.0), 0.0);
        assert_eq!(binomial_tail(2, 3, 1.0), 1.0);
    }

    #[test]
    fn beta_one_needs_a_single_sample() {
        assert_eq!(sample_size(0.3, 1.0, 4).unwrap(), 1);
        assert_eq!(sample_size(1e-6, 1.0, 55).unwrap(), 1);
    }

    #[test]
    fn zero_eps_is_unachievable() {
        assert_eq!(
            sample_size(0.0, 0.5, 2),
            Err(SampleSizeError::Unachievable)
        );
        assert_eq!(sample_size(0.0, 1.0, 2), Ok(1));
    }

    #[test]
    fn matches_linear_scan_oracle() {
        assert_eq!(sample_size(0.1, 0.01, 2).unwrap(), 64);
        assert_eq!(
            scan_sample_size(0.1, 0.01, 2, 1_000),
            Some(sample_size(0.1, 0.01, 2).unwrap())
        );
        for &(eps, beta, dim) in &[
            (0.2, 0.05, 1u64),
            (0.3, 0.2, 3),
            (0.05, 0.1, 2),
            (0.5, 0.01, 4),
        ] {
            assert_eq!(
                sample_size(eps, beta, dim).unwrap(),
                scan_sample_size(eps, beta, dim, 10_000).unwrap(),
                "eps={eps} beta={beta} dim={dim}"
            );
        }
    }

    #[test]
    fn minimality_at_the_boundary() {
        for &(eps, beta, dim) in &[(0.1, 0.01, 2u64), (0.05, 0.001, 5), (0.02, 0.1, 3)] {
            let n = sample_size(eps, beta, dim).unwrap();
            assert!(binomial_tail(n, dim, eps) <= beta);
            if n > 1 {
                assert!(binomial_tail(n - 1, dim, eps) > beta);
            }
        }
    }

    #[test]
    fn union_with_one_member_reduces_to_sample_size() {
        for &(eps, beta, dim) in &[(0.1, 0.01, 2u64), (0.25, 0.05, 3)] {
            assert_eq!(
                sample_size_union(&[eps], beta, dim).unwrap(),
                sample_size(eps, beta, dim).unwrap()
            );
        }
    }

    #[test]
    fn union_with_equal_levels_divides_beta() {
        for &m in &[2usize, 3, 5, 8] {
            let levels = vec![0.1; m];
            assert_eq!(
                sample_size_union(&levels, 0.05, 2).unwrap(),
                sample_size(0.1, 0.05 / m as f64, 2).unwrap(),
                "m = {m}"
            );
        }
    }

    #[test]
    fn union_dominates_each_member() {
        let levels = [0.1, 0.2, 0.05];
        let union = sample_size_union(&levels, 0.02, 3).unwrap();
        for &eps in &levels {
            assert!(union >= sample_size(eps, 0.02, 3).unwrap());
        }
    }

    #[test]
    fn union_zero_level_is_unachievable() {
        assert_eq!(
            sample_size_union(&[0.1, 0.0], 0.5, 2),
            Err(SampleSizeError::Unachievable)
        );
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            sample_size(-0.1, 0.5, 2),
            Err(SampleSizeError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            sample_size(0.5, 0.0, 2),
            Err(SampleSizeError::InvalidBeta(_))
        ));
        assert!(matches!(
            sample_size_union(&[], 0.5, 2),
            Err(SampleSizeError::EmptyLevels)
        ));
    }

    #[test]
    fn monotone_in_eps_beta_and_dimension() {
        let eps_grid = [0.05, 0.1, 0.2, 0.4];
        let beta_grid = [0.001, 0.01, 0.1];
        let dims = [1u64, 2, 5, 10];
        for &beta in &beta_grid {
            for &dim in &dims {
                let mut previous = u64::MAX;
                for &eps in &eps_grid {
                    let n = sample_size(eps, beta, dim).unwrap();
                    assert!(n <= previous, "not non-increasing in eps");
                    previous = n;
                }
            }
        }
        for &eps in &eps_grid {
            for &dim in &dims {
                let mut previous = u64::MAX;
                for &beta in &beta_grid {
                    let n = sample_size(eps, beta, dim).unwrap();
                    assert!(previous == u64::MAX || n <= previous, "not non-increasing in beta");
                    previous = n;
                }
            }
        }
        for &eps in &eps_grid {
            for &beta in &beta_grid {
                let mut previous = 0u64;
                for &dim in &dims {
                    let n = sample_size(eps, beta, dim).unwrap();
                    assert!(n >= previous, "not non-decreasing in dimension");
                    previous = n;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn log_space_tail_matches_exact_rational(
            trials in 1u64..=40,
            dimension in 1u64..=10,
            eps in 1e-6_f64..0.999,
        ) {
            let exact = rational_tail(trials, dimension, eps);
            let fast = binomial_tail(trials, dimension, eps);
            let scale = exact.abs().max(1e-300);
            prop_assert!((fast - exact).abs() / scale < 1e-10);
        }
    }
}
