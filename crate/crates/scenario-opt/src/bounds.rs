//! Uniform level-set bounds, the Slater perturbation constant, and the
//! a priori / a posteriori confidence intervals they induce.
//!
//! A [`Ulb`] is built from a Lipschitz constant `L_d` of `d -> f(x, d)` and a
//! ball-measure lower bound from the power family `g(r) = kappa * r^p`, so
//! `h(eps) = L_d * (eps / kappa)^(1/p)` converts a chance level into a
//! worst-case slack. The interval around the scenario value uses either the
//! Slater constant (a priori) or the scenario dual l1 norm (a posteriori),
//! capped by the objective range over the decision set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, dot, RangeError};
use crate::model::UncertainProgram;
use crate::sample_size::{self, SampleSizeError};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("lipschitz constant must be positive, got {0}")]
    InvalidLipschitz(f64),
    #[error("ball-measure coefficient must be positive, got {0}")]
    InvalidMeasureCoefficient(f64),
    #[error("ball-measure exponent must be at least 1, got {0}")]
    InvalidMeasureExponent(f64),
    #[error("not a Slater point: worst-case constraint value {0} is not negative")]
    NotSlater(f64),
    #[error("candidate Slater point lies outside the decision set")]
    SlaterOutsideDomain,
    #[error("precision target must be positive, got {0}")]
    InvalidPrecision(f64),
    #[error("constraint oracle provides no worst-case value")]
    MissingSupOracle,
    #[error("objective range unavailable: {0}")]
    Range(#[from] RangeError),
    #[error(transparent)]
    SampleSize(#[from] SampleSizeError),
}

/// Uniform level-set bound `h(eps) = L_d * g^{-1}(eps)` for the power family
/// `g(r) = kappa * r^p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ulb {
    l_d: f64,
    kappa: f64,
    power: f64,
}

impl Ulb {
    pub fn new(l_d: f64, kappa: f64, power: f64) -> Result<Self, BoundsError> {
        if !(l_d > 0.0) {
            return Err(BoundsError::InvalidLipschitz(l_d));
        }
        if !(kappa > 0.0) {
            return Err(BoundsError::InvalidMeasureCoefficient(kappa));
        }
        if !(power >= 1.0) {
            return Err(BoundsError::InvalidMeasureExponent(power));
        }
        Ok(Self { l_d, kappa, power })
    }

    pub fn lipschitz(&self) -> f64 {
        self.l_d
    }

    /// `h(eps) = L_d * (eps / kappa)^(1/p)`; strictly increasing, `h(0) = 0`.
    pub fn h(&self, eps: f64) -> f64 {
        self.l_d * self.g_inv(eps)
    }

    /// Ball-measure lower bound, clamped into `[0, 1]`.
    pub fn g(&self, radius: f64) -> f64 {
        (self.kappa * radius.powf(self.power)).min(1.0)
    }

    pub fn g_inv(&self, eps: f64) -> f64 {
        (eps / self.kappa).powf(1.0 / self.power)
    }
}

/// Certified Slater point with its perturbation constant
/// `L_SP = (min_X c·x - c·x0) / sup_d f(x0, d)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlaterCertificate {
    pub x0: Vec<f64>,
    /// `sup_d f(x0, d)`, strictly negative.
    pub margin: f64,
    pub l_sp: f64,
}

/// Perturbation constant used by the a priori interval. Min-max programs get
/// the constant 1 directly; it is an alternative to the Slater formula, never
/// combined with it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlaterConstant {
    Certified(SlaterCertificate),
    MinMax,
}

impl SlaterConstant {
    pub fn l_sp(&self) -> f64 {
        match self {
            SlaterConstant::Certified(certificate) => certificate.l_sp,
            SlaterConstant::MinMax => 1.0,
        }
    }
}

/// Builds the Slater certificate for `program` at `x0`.
///
/// `sup_value` is `sup_d f(x0, d)`, supplied by the caller or by the
/// program's closed-form worst-case oracle; it must be strictly negative.
pub fn slater_constant(
    program: &UncertainProgram,
    x0: Vec<f64>,
    sup_value: f64,
) -> Result<SlaterCertificate, BoundsError> {
    if !program.domain.contains(&x0, 1e-9) {
        return Err(BoundsError::SlaterOutsideDomain);
    }
    if !(sup_value < 0.0) {
        return Err(BoundsError::NotSlater(sup_value));
    }
    let (min_value, _) = lp::value_range(&program.cost, &program.domain.lp_rows())?;
    let l_sp = ((min_value - dot(&program.cost, &x0)) / sup_value).max(0.0);
    Ok(SlaterCertificate {
        x0,
        margin: sup_value,
        l_sp,
    })
}

/// Which branch of the min in the interval definition was active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalBranch {
    /// `constant * h(eps)` was the smaller term.
    Ulb,
    /// The objective range over the decision set was the smaller term.
    Range,
}

/// One-sided interval width with its active branch.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Interval {
    pub width: f64,
    pub branch: IntervalBranch,
}

fn capped_interval(constant: f64, ulb: &Ulb, eps: f64, range: f64) -> Interval {
    let scaled = constant * ulb.h(eps);
    if scaled <= range {
        Interval {
            width: scaled,
            branch: IntervalBranch::Ulb,
        }
    } else {
        Interval {
            width: range,
            branch: IntervalBranch::Range,
        }
    }
}

/// A priori interval `I(eps) = min(L_SP * h(eps), range)`.
pub fn apriori_interval(l_sp: f64, ulb: &Ulb, eps: f64, range: f64) -> Interval {
    capped_interval(l_sp, ulb, eps, range)
}

/// A posteriori interval `I_N(eps) = min(dual_l1 * h(eps), range)`.
pub fn aposteriori_interval(dual_l1: f64, ulb: &Ulb, eps: f64, range: f64) -> Interval {
    capped_interval(dual_l1, ulb, eps, range)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    RcpAPriori,
    CcpAPriori,
    CcpAPosteriori,
    RpAPriori,
    CpAPriori,
    CpAPosteriori,
}

/// Confidence interval for a robust or chance-constrained optimal value,
/// anchored at the scenario value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub kind: ReportKind,
    pub lower: f64,
    pub upper: f64,
    pub eps: f64,
    pub beta: f64,
    /// Minimal scenario count backing the guarantee; `None` when no finite
    /// count achieves it.
    pub n_required: Option<u64>,
    pub n_used: u64,
    pub scp_value: f64,
    pub interval_width: f64,
    pub branch: IntervalBranch,
    /// True iff `n_used` meets the required scenario count.
    pub guaranteed: bool,
}

/// Interval `[J_N, J_N + I(eps)]` for the robust optimal value.
pub fn rcp_report(
    scp_value: f64,
    interval: Interval,
    eps: f64,
    beta: f64,
    n_used: u64,
    dimension: u64,
) -> ConfidenceReport {
    let n_required = sample_size::sample_size(eps, beta, dimension).ok();
    ConfidenceReport {
        kind: ReportKind::RcpAPriori,
        lower: scp_value,
        upper: scp_value + interval.width,
        eps,
        beta,
        n_required,
        n_used,
        scp_value,
        interval_width: interval.width,
        branch: interval.branch,
        guaranteed: n_required.is_some_and(|required| n_used >= required),
    }
}

/// Interval `[J_N - I, J_N]` for the chance-constrained optimal value; pass
/// the a priori or a posteriori interval and flag which one it was.
pub fn ccp_report(
    scp_value: f64,
    interval: Interval,
    eps: f64,
    beta: f64,
    n_used: u64,
    dimension: u64,
    posterior: bool,
) -> ConfidenceReport {
    let n_required = sample_size::sample_size(eps, beta, dimension).ok();
    ConfidenceReport {
        kind: if posterior {
            ReportKind::CcpAPosteriori
        } else {
            ReportKind::CcpAPriori
        },
        lower: scp_value - interval.width,
        upper: scp_value,
        eps,
        beta,
        n_required,
        n_used,
        scp_value,
        interval_width: interval.width,
        branch: interval.branch,
        guaranteed: n_required.is_some_and(|required| n_used >= required),
    }
}

/// Scenario count that shrinks the a priori robust interval to
/// `eps_target`: `N(g(eps_target / (L_SP * L_d)), beta)`, with the
/// ball-measure argument clamped to 1 (larger arguments only relax the tail
/// condition).
pub fn samples_for_precision(
    eps_target: f64,
    beta: f64,
    l_sp: f64,
    ulb: &Ulb,
    dimension: u64,
) -> Result<u64, BoundsError> {
    if !(eps_target > 0.0) {
        return Err(BoundsError::InvalidPrecision(eps_target));
    }
    let level = ulb.g(eps_target / (l_sp * ulb.lipschitz()));
    Ok(sample_size::sample_size(level, beta, dimension)?)
}

/// Outcome of the Monte Carlo validation of a candidate ULB.
#[derive(Clone, Debug, Serialize)]
pub struct UlbCheckReport {
    pub entries: Vec<UlbCheckEntry>,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct UlbCheckEntry {
    pub eps: f64,
    /// `h(eps)`, the slack whose tail probability is being probed.
    pub delta: f64,
    /// Smallest estimated tail probability over the decision grid.
    pub min_tail: f64,
    pub violations: Vec<UlbViolation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UlbViolation {
    pub x_index: usize,
    pub tail_estimate: f64,
    pub slack: f64,
}

impl UlbCheckReport {
    pub fn is_clean(&self) -> bool {
        self.entries.iter().all(|entry| entry.violations.is_empty())
    }
}

/// Empirically probes the defining ULB property on a decision grid: for each
/// grid level `eps`, the estimated tail probability `p(x, h(eps))` must reach
/// `eps` up to a three-sigma binomial slack, uniformly over the grid.
///
/// Diagnostic only; it samples the tail probability with `samples` draws per
/// decision point and needs the program's worst-case oracle.
pub fn ulb_empirical_check(
    ulb: &Ulb,
    program: &UncertainProgram,
    x_grid: &[Vec<f64>],
    eps_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<UlbCheckReport, BoundsError> {
    assert!(samples >= 1, "tail estimation needs at least one draw");
    if x_grid
        .iter()
        .any(|x| program.constraint.sup_value(x).is_none())
    {
        return Err(BoundsError::MissingSupOracle);
    }

    let draws: Vec<f64> = (1..=samples as u64)
        .map(|i| program.sampler.draw(seed, i))
        .collect();

    // Per decision point, the sorted worst-case gaps sup_v f(x,v) - f(x,d):
    // the tail estimate at slack delta is the fraction of gaps below delta.
    let sorted_gaps: Vec<Vec<f64>> = x_grid
        .par_iter()
        .map(|x| {
            let sup = program.constraint.sup_value(x).expect("checked above");
            let mut gaps: Vec<f64> = draws
                .iter()
                .map(|&d| sup - program.constraint_value(x, d))
                .collect();
            gaps.sort_by(f64::total_cmp);
            gaps
        })
        .collect();

    let entries = eps_grid
        .iter()
        .map(|&eps| {
            let delta = ulb.h(eps);
            let mut min_tail = f64::INFINITY;
            let mut violations = Vec::new();
            for (x_index, gaps) in sorted_gaps.iter().enumerate() {
                let below = gaps.partition_point(|&gap| gap < delta);
                let tail = below as f64 / samples as f64;
                min_tail = min_tail.min(tail);
                let slack = 3.0 * (tail * (1.0 - tail) / samples as f64).sqrt();
                if tail < eps - slack {
                    violations.push(UlbViolation {
                        x_index,
                        tail_estimate: tail,
                        slack,
                    });
                }
            }
            UlbCheckEntry {
                eps,
                delta,
                min_tail,
                violations,
            }
        })
        .collect();

    Ok(UlbCheckReport { entries, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Polytope, Sampler, UnitCircleCuts};
    use std::f64::consts::{PI, SQRT_2};
    use std::sync::Arc;

    fn example1() -> UncertainProgram {
        UncertainProgram::new(
            vec![-1.0, -1.0],
            Polytope::from_box(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
            Arc::new(UnitCircleCuts),
            Sampler::uniform(0.0, 2.0 * PI),
        )
        .unwrap()
    }

    fn example1_ulb() -> Ulb {
        Ulb::new(SQRT_2, 1.0 / PI, 1.0).unwrap()
    }

    #[test]
    fn ulb_reproduces_the_benchmark_form() {
        let ulb = example1_ulb();
        assert!((ulb.h(0.1) - SQRT_2 * PI * 0.1).abs() < 1e-12);
        assert_eq!(ulb.h(0.0), 0.0);
    }

    #[test]
    fn ulb_reproduces_the_fault_detection_form() {
        let ulb = Ulb::new(0.02, 0.142, 1.0).unwrap();
        assert!((ulb.h(1.0) - 0.02 / 0.142).abs() < 1e-12);
        assert!((ulb.h(0.5) - 0.5 * 0.02 / 0.142).abs() < 1e-12);
    }

    #[test]
    fn ulb_rejects_bad_parameters() {
        assert!(matches!(
            Ulb::new(1.0, 0.0, 1.0),
            Err(BoundsError::InvalidMeasureCoefficient(_))
        ));
        assert!(matches!(
            Ulb::new(0.0, 1.0, 1.0),
            Err(BoundsError::InvalidLipschitz(_))
        ));
        assert!(matches!(
            Ulb::new(1.0, 1.0, 0.5),
            Err(BoundsError::InvalidMeasureExponent(_))
        ));
    }

    #[test]
    fn g_round_trips_through_its_inverse() {
        for &(kappa, power) in &[(1.0 / PI, 1.0), (0.142, 1.0), (0.3, 2.0), (2.0, 3.0)] {
            let ulb = Ulb::new(1.0, kappa, power).unwrap();
            for i in 0..=20 {
                let eps = i as f64 / 20.0;
                assert!(
                    (ulb.g(ulb.g_inv(eps)) - eps).abs() < 1e-12,
                    "kappa={kappa} power={power} eps={eps}"
                );
            }
        }
    }

    #[test]
    fn slater_constant_of_the_benchmark_is_two() {
        let program = example1();
        let sup = program.constraint.sup_value(&[0.0, 0.0]).unwrap();
        assert_eq!(sup, -1.0);
        let certificate = slater_constant(&program, vec![0.0, 0.0], sup).unwrap();
        assert!((certificate.l_sp - 2.0).abs() < 1e-9);
        assert_eq!(certificate.margin, -1.0);
    }

    #[test]
    fn non_negative_sup_is_rejected() {
        let program = example1();
        assert!(matches!(
            slater_constant(&program, vec![0.0, 0.0], 0.5),
            Err(BoundsError::NotSlater(_))
        ));
    }

    #[test]
    fn outside_points_are_rejected() {
        let program = example1();
        assert!(matches!(
            slater_constant(&program, vec![2.0, 0.0], -1.0),
            Err(BoundsError::SlaterOutsideDomain)
        ));
    }

    #[test]
    fn min_max_constant_is_one() {
        assert_eq!(SlaterConstant::MinMax.l_sp(), 1.0);
    }

    #[test]
    fn apriori_interval_branches() {
        let ulb = example1_ulb();
        let tight = apriori_interval(2.0, &ulb, 0.1, 2.0);
        assert!((tight.width - 2.0 * SQRT_2 * PI * 0.1).abs() < 1e-12);
        assert_eq!(tight.branch, IntervalBranch::Ulb);

        let capped = apriori_interval(2.0, &ulb, 0.5, 2.0);
        assert_eq!(capped.width, 2.0);
        assert_eq!(capped.branch, IntervalBranch::Range);

        let degenerate = apriori_interval(2.0, &ulb, 0.0, 2.0);
        assert_eq!(degenerate.width, 0.0);
    }

    #[test]
    fn aposteriori_interval_examples() {
        let ulb = example1_ulb();
        let zero = aposteriori_interval(0.0, &ulb, 0.3, 2.0);
        assert_eq!(zero.width, 0.0);

        let from_dual = aposteriori_interval(SQRT_2, &ulb, 0.1, 2.0);
        assert!((from_dual.width - 0.2 * PI).abs() < 1e-12);

        let capped = aposteriori_interval(SQRT_2, &ulb, 1.0, 2.0);
        assert_eq!(capped.width, 2.0);
    }

    #[test]
    fn interval_never_exceeds_the_range() {
        let ulb = example1_ulb();
        for i in 0..=10 {
            let eps = i as f64 / 10.0;
            assert!(apriori_interval(2.0, &ulb, eps, 2.0).width <= 2.0);
            assert!(aposteriori_interval(1.7, &ulb, eps, 2.0).width <= 2.0);
        }
    }

    #[test]
    fn reports_set_the_guarantee_flag() {
        let ulb = example1_ulb();
        let interval = apriori_interval(2.0, &ulb, 0.1, 2.0);
        let report = rcp_report(-1.5, interval, 0.1, 0.01, 64, 2);
        assert_eq!(report.n_required, Some(64));
        assert!(report.guaranteed);
        assert!((report.lower + 1.5).abs() < 1e-12);
        assert!((report.upper - (-1.5 + interval.width)).abs() < 1e-12);

        let undersampled = rcp_report(-1.5, interval, 0.1, 0.01, 10, 2);
        assert!(!undersampled.guaranteed);

        let degenerate = rcp_report(-1.5, apriori_interval(2.0, &ulb, 0.0, 2.0), 0.0, 0.5, 10, 2);
        assert_eq!(degenerate.lower, degenerate.upper);
        assert_eq!(degenerate.n_required, None);
        assert!(!degenerate.guaranteed);
    }

    #[test]
    fn ccp_report_mirrors_the_interval() {
        let ulb = example1_ulb();
        let interval = aposteriori_interval(SQRT_2, &ulb, 0.1, 2.0);
        let report = ccp_report(-1.5, interval, 0.1, 0.01, 100, 2, true);
        assert_eq!(report.kind, ReportKind::CcpAPosteriori);
        assert!((report.upper + 1.5).abs() < 1e-12);
        assert!((report.lower - (-1.5 - interval.width)).abs() < 1e-12);
        assert!(report.guaranteed);
    }

    #[test]
    fn precision_rule_composes_the_maps() {
        let ulb = example1_ulb();
        // Mapped level for a target equal to the range.
        let n_range = samples_for_precision(2.0, 0.01, 2.0, &ulb, 2).unwrap();
        let expected_level = (2.0 / (2.0 * SQRT_2)) / PI;
        assert_eq!(
            n_range,
            sample_size::sample_size(expected_level, 0.01, 2).unwrap()
        );

        // Consistency: the interval at the mapped level stays within target.
        let interval = apriori_interval(2.0, &ulb, expected_level, 2.0);
        assert!(interval.width <= 2.0 + 1e-12);

        // Huge targets clamp the level at 1.
        let n_min = samples_for_precision(1e9, 0.5, 2.0, &ulb, 2).unwrap();
        assert_eq!(n_min, sample_size::sample_size(1.0, 0.5, 2).unwrap());

        // Monotone: tighter targets need more samples.
        let n_tight = samples_for_precision(0.2, 0.01, 2.0, &ulb, 2).unwrap();
        let n_loose = samples_for_precision(0.8, 0.01, 2.0, &ulb, 2).unwrap();
        assert!(n_tight >= n_loose);

        assert!(matches!(
            samples_for_precision(0.0, 0.01, 2.0, &ulb, 2),
            Err(BoundsError::InvalidPrecision(_))
        ));
    }

    #[test]
    fn ulb_check_requires_a_sup_oracle() {
        let program = UncertainProgram::new(
            vec![-1.0, -1.0],
            Polytope::from_box(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
            Arc::new(crate::model::ClosureOracle::new(
                2,
                |d: f64| vec![d.cos(), d.sin()],
                |_| 1.0,
            )),
            Sampler::uniform(0.0, 2.0 * PI),
        )
        .unwrap();
        let result = ulb_empirical_check(
            &example1_ulb(),
            &program,
            &[vec![0.5, 0.5]],
            &[0.1],
            100,
            1,
        );
        assert!(matches!(result, Err(BoundsError::MissingSupOracle)));
    }

    #[test]
    fn ulb_check_passes_on_a_small_benchmark_grid() {
        let program = example1();
        let grid: Vec<Vec<f64>> = (0..4)
            .flat_map(|i| (0..4).map(move |j| vec![i as f64 / 3.0, j as f64 / 3.0]))
            .collect();
        let report = ulb_empirical_check(
            &example1_ulb(),
            &program,
            &grid,
            &[0.05, 0.1, 0.2, 0.4],
            20_000,
            31,
        )
        .unwrap();
        assert!(report.is_clean());
    }

    #[test]
    fn large_slack_saturates_the_tail_probability() {
        // delta beyond the oscillation of f(x, .) makes every draw a hit.
        let program = example1();
        let huge = Ulb::new(10.0, 1.0 / PI, 1.0).unwrap();
        let report =
            ulb_empirical_check(&huge, &program, &[vec![1.0, 1.0]], &[0.5], 2_000, 7).unwrap();
        assert_eq!(report.entries[0].min_tail, 1.0);
    }

    #[test]
    fn zero_slack_has_null_tail_under_a_nonatomic_sampler() {
        let program = example1();
        let report = ulb_empirical_check(
            &example1_ulb(),
            &program,
            &[vec![1.0, 1.0]],
            &[0.0],
            5_000,
            13,
        )
        .unwrap();
        assert_eq!(report.entries[0].min_tail, 0.0);
    }
}
