//! Experiment driver for the analytically solvable benchmark and the
//! robust-infeasibility counterexample.
//!
//! The benchmark minimizes `-x1 - x2` over the unit box under the moving
//! half-plane `x1 cos d + x2 sin d <= 1` with `d` uniform on `[0, 2*pi]`;
//! the robust and chance-constrained optimal values have closed forms, so a
//! Monte Carlo sweep of scenario programs can be compared against theory.
//! Each sweep runs M independent experiments, extracts empirical interval
//! widths per chance level, and emits one CSV row per level.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    aposteriori_interval, apriori_interval, slater_constant, BoundsError, Ulb,
};
use crate::lp::{self};
use crate::model::{
    sample_scenarios, ModelError, Polytope, Sampler, ScalarUpperBound, UncertainProgram,
    UnitCircleCuts,
};
use crate::rng::derive_seed;
use crate::scenario::{solve_scp, ScpOutcome, SolveError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("chance level {0} outside the closed-form domain [0, 0.5]")]
    EpsOutOfRange(f64),
    #[error("relaxation level {0} must be nonnegative")]
    NegativeGamma(f64),
    #[error("experiment {experiment} produced an infeasible scenario program")]
    UnexpectedInfeasible { experiment: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The benchmark program: `min -x1 - x2` over `[0,1]^2` with unit-circle
/// tangent cuts and uniform angles.
pub fn example1_program() -> UncertainProgram {
    UncertainProgram::new(
        vec![-1.0, -1.0],
        Polytope::from_box(vec![(0.0, 1.0), (0.0, 1.0)]).expect("unit box is compact"),
        Arc::new(UnitCircleCuts),
        Sampler::uniform(0.0, 2.0 * std::f64::consts::PI),
    )
    .expect("benchmark dimensions agree")
}

/// The counterexample program: `min -x` over `[-1, 1]` with `x <= d` and `d`
/// uniform on `[0, 1]`. Its robust feasible set is `[-1, 0]`, yet the
/// scenario optimizer `min_i d_i` is positive almost surely.
pub fn counterexample_program() -> UncertainProgram {
    UncertainProgram::new(
        vec![-1.0],
        Polytope::from_box(vec![(-1.0, 1.0)]).expect("interval is compact"),
        Arc::new(ScalarUpperBound),
        Sampler::uniform(0.0, 1.0),
    )
    .expect("counterexample dimensions agree")
}

/// Closed-form relaxed robust value `max(-sqrt(2)(gamma + 1), -2)`.
pub fn analytic_example1_rcp(gamma: f64) -> Result<f64, HarnessError> {
    if !(gamma >= 0.0) {
        return Err(HarnessError::NegativeGamma(gamma));
    }
    Ok((-std::f64::consts::SQRT_2 * (gamma + 1.0)).max(-2.0))
}

/// Closed-form chance-constrained value `max(-sqrt(2)/cos(pi*eps), -2)`.
///
/// Valid for `eps` in `[0, 0.5]`; from `eps = 0.25` on, the box cap `-2` is
/// active, which keeps the endpoint `0.5` exact even as the cosine vanishes.
pub fn analytic_example1_ccp(eps: f64) -> Result<f64, HarnessError> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(HarnessError::EpsOutOfRange(eps));
    }
    Ok((-std::f64::consts::SQRT_2 / (std::f64::consts::PI * eps).cos()).max(-2.0))
}

/// Confidence level for the benchmark's dimension (n = 2):
/// `(1 - eps)^N + N eps (1 - eps)^(N-1)`.
pub fn beta_star(eps: f64, scenarios: usize) -> f64 {
    let n = scenarios as i32;
    (1.0 - eps).powi(n) + scenarios as f64 * eps * (1.0 - eps).powi(n - 1)
}

/// Minimal empirical interval width admitting a qualifying experiment set:
/// the `ceil((1 - beta) * M)`-th smallest difference.
///
/// Differences must be nonnegative up to float noise (clamped at zero);
/// experiments that can never qualify are passed as `f64::INFINITY`.
pub fn empirical_interval(diffs: &[f64], beta: f64) -> f64 {
    assert!(!diffs.is_empty(), "empirical interval needs experiments");
    if beta >= 1.0 {
        return 0.0;
    }
    let m = diffs.len();
    let needed = (((1.0 - beta) * m as f64) - 1e-9).ceil() as usize;
    let needed = needed.clamp(1, m);
    let mut sorted = diffs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[needed - 1].max(0.0)
}

/// Sweep configuration; `experiments` defaults to the benchmark's 2000.
#[derive(Clone, Debug)]
pub struct Example1Config {
    pub scenarios: usize,
    pub experiments: usize,
    pub eps_grid: Vec<f64>,
    pub seed: u64,
}

impl Example1Config {
    pub fn new(scenarios: usize, eps_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            scenarios,
            experiments: 2000,
            eps_grid,
            seed,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.scenarios == 0 {
            return Err(HarnessError::InvalidConfig(
                "at least one scenario per experiment".into(),
            ));
        }
        if self.experiments == 0 {
            return Err(HarnessError::InvalidConfig("at least one experiment".into()));
        }
        if self.eps_grid.is_empty() {
            return Err(HarnessError::InvalidConfig("empty chance-level grid".into()));
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(HarnessError::InvalidConfig(
                "chance levels must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One CSV row of the sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRow {
    pub eps: f64,
    pub beta_star: f64,
    #[serde(rename = "I_eps")]
    pub i_eps: f64,
    #[serde(rename = "I_tilde")]
    pub i_tilde: f64,
    #[serde(rename = "I_tilde_eps")]
    pub i_tilde_eps: f64,
    #[serde(rename = "I_N_eps")]
    pub i_n_eps: f64,
    pub coverage_rcp: f64,
    pub coverage_ccp: f64,
}

/// Full sweep output: grid rows plus the per-experiment raw values.
#[derive(Clone, Debug)]
pub struct Example1Report {
    pub rows: Vec<ExperimentRow>,
    pub scenario_values: Vec<f64>,
    pub dual_l1_values: Vec<f64>,
}

/// Runs M scenario experiments and evaluates the interval grid.
///
/// Experiment k draws its scenarios from the stream `seed ^ k`; experiment 1
/// is the designated run whose dual norm feeds the plotted a posteriori
/// curve. Chance-side differences that can never satisfy the one-sided
/// interval (scenario value below the chance value beyond float noise) are
/// excluded by mapping them to infinity.
pub fn run_example1(config: &Example1Config) -> Result<Example1Report, HarnessError> {
    config.validate()?;
    let program = example1_program();
    let j_rcp = analytic_example1_rcp(0.0)?;

    let sup_at_origin = program
        .constraint
        .sup_value(&[0.0, 0.0])
        .expect("benchmark oracle has a worst case");
    let slater = slater_constant(&program, vec![0.0, 0.0], sup_at_origin)?;
    let ulb = Ulb::new(
        std::f64::consts::SQRT_2,
        std::f64::consts::FRAC_1_PI,
        1.0,
    )?;
    let (lo, hi) = lp::value_range(&program.cost, &program.domain.lp_rows())
        .map_err(BoundsError::Range)?;
    let range = hi - lo;

    let experiments: Vec<(f64, f64)> = (1..=config.experiments)
        .into_par_iter()
        .map(|k| {
            let set = sample_scenarios(
                &program.sampler,
                config.scenarios,
                derive_seed(config.seed, k as u64),
            );
            match solve_scp(&program, &set, 0.0)? {
                ScpOutcome::Optimal(solution) => Ok((solution.value, solution.dual_l1())),
                ScpOutcome::Infeasible => Err(HarnessError::UnexpectedInfeasible { experiment: k }),
            }
        })
        .collect::<Result<_, _>>()?;

    let scenario_values: Vec<f64> = experiments.iter().map(|e| e.0).collect();
    let dual_l1_values: Vec<f64> = experiments.iter().map(|e| e.1).collect();
    let designated_dual_l1 = dual_l1_values[0];
    let m = config.experiments as f64;

    let rcp_diffs: Vec<f64> = scenario_values.iter().map(|&j| (j_rcp - j).max(0.0)).collect();

    let mut rows = Vec::with_capacity(config.eps_grid.len());
    for &eps in &config.eps_grid {
        let beta = beta_star(eps, config.scenarios);
        let i_eps = apriori_interval(slater.l_sp, &ulb, eps, range).width;
        let j_ccp = analytic_example1_ccp(eps)?;

        let ccp_diffs: Vec<f64> = scenario_values
            .iter()
            .map(|&j| {
                let diff = j - j_ccp;
                if diff < -1e-9 {
                    f64::INFINITY
                } else {
                    diff.max(0.0)
                }
            })
            .collect();

        let i_tilde = empirical_interval(&rcp_diffs, beta);
        let i_tilde_eps = empirical_interval(&ccp_diffs, beta);
        let i_n_eps = aposteriori_interval(designated_dual_l1, &ulb, eps, range).width;

        let coverage_rcp =
            rcp_diffs.iter().filter(|&&diff| diff <= i_eps).count() as f64 / m;
        let coverage_ccp = ccp_diffs
            .iter()
            .zip(&dual_l1_values)
            .filter(|&(&diff, &dual)| {
                diff.is_finite() && diff <= aposteriori_interval(dual, &ulb, eps, range).width
            })
            .count() as f64
            / m;

        rows.push(ExperimentRow {
            eps,
            beta_star: beta,
            i_eps,
            i_tilde,
            i_tilde_eps,
            i_n_eps,
            coverage_rcp,
            coverage_ccp,
        });
    }

    Ok(Example1Report {
        rows,
        scenario_values,
        dual_l1_values,
    })
}

/// Writes the sweep rows with the fixed column order
/// `eps,beta_star,I_eps,I_tilde,I_tilde_eps,I_N_eps,coverage_rcp,coverage_ccp`.
pub fn write_rows_csv<W: Write>(rows: &[ExperimentRow], writer: W) -> Result<(), csv::Error> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    for row in rows {
        csv_writer.serialize(row)?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Outcome of the robust-infeasibility counterexample runs.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub runs: usize,
    pub scenarios: usize,
    /// Largest deviation of the scenario optimizer from `min_i d_i`.
    pub max_optimizer_gap: f64,
    /// Runs whose optimizer satisfied the robust program (`x <= 0`).
    pub rcp_feasible_runs: usize,
}

/// Runs the counterexample M times: the scenario optimizer must equal the
/// sample minimum, and under a nonatomic sampler it is robust-feasible with
/// probability zero.
pub fn run_counterexample(
    scenarios: usize,
    runs: usize,
    seed: u64,
) -> Result<CounterexampleReport, HarnessError> {
    assert!(scenarios >= 1 && runs >= 1);
    let program = counterexample_program();
    let per_run: Vec<(f64, bool)> = (1..=runs)
        .into_par_iter()
        .map(|k| {
            let set = sample_scenarios(&program.sampler, scenarios, derive_seed(seed, k as u64));
            let solution = match solve_scp(&program, &set, 0.0)? {
                ScpOutcome::Optimal(solution) => solution,
                ScpOutcome::Infeasible => {
                    return Err(HarnessError::UnexpectedInfeasible { experiment: k })
                }
            };
            let minimum = set.points.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok(((solution.x[0] - minimum).abs(), solution.x[0] <= 0.0))
        })
        .collect::<Result<_, _>>()?;

    Ok(CounterexampleReport {
        runs,
        scenarios,
        max_optimizer_gap: per_run.iter().map(|r| r.0).fold(0.0, f64::max),
        rcp_feasible_runs: per_run.iter().filter(|r| r.1).count(),
    })
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1);
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}
