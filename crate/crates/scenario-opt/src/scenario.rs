//! Scenario program assembly, dual extraction, and the tie-break second stage.
//!
//! `solve_scp` lowers every scenario to the row `a(d_i)·x <= b(d_i) + gamma`,
//! appends the decision polytope, and solves one linear program. The
//! scenario-row duals feed the a posteriori confidence interval. `tie_break`
//! then minimizes the squared norm over the optimal face with a
//! conditional-gradient iteration whose only subroutine is the same LP
//! solver, giving a unique, order-independent optimizer.

use thiserror::Error;

use crate::lp::{self, dot, LinearProgram, LpError, LpOutcome, Row, RowTag};
use crate::model::{ScenarioSet, UncertainProgram};

/// Slack admitted on the `c·x <= J` row to absorb first-stage rounding.
pub const VALUE_CAP_SLACK: f64 = 1e-9;
/// Conditional-gradient duality-gap stopping threshold.
pub const TIE_BREAK_GAP: f64 = 1e-8;

const TIE_BREAK_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("bounded program reported unbounded; domain certification violated")]
    UnexpectedUnbounded,
    #[error("tie-break stage found the capped program infeasible")]
    TieBreakInfeasible,
    #[error("tie-break stalled with duality gap {gap:.3e} after {iterations} iterations")]
    TieBreakStalled { gap: f64, iterations: usize },
}

/// Optimum of a scenario program with its per-scenario multipliers.
#[derive(Clone, Debug)]
pub struct ScpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One nonnegative multiplier per scenario, in draw order.
    pub scenario_duals: Vec<f64>,
    pub gamma: f64,
    pub scenarios: ScenarioSet,
}

impl ScpSolution {
    /// l1 norm of the scenario-row duals; domain and box rows are excluded
    /// because only scenario rows are relaxed by gamma.
    pub fn dual_l1(&self) -> f64 {
        self.scenario_duals.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub enum ScpOutcome {
    Optimal(ScpSolution),
    Infeasible,
}

impl ScpOutcome {
    pub fn into_optimal(self) -> Option<ScpSolution> {
        match self {
            ScpOutcome::Optimal(solution) => Some(solution),
            ScpOutcome::Infeasible => None,
        }
    }

    pub fn optimal(&self) -> Option<&ScpSolution> {
        match self {
            ScpOutcome::Optimal(solution) => Some(solution),
            ScpOutcome::Infeasible => None,
        }
    }
}

fn scenario_rows(program: &UncertainProgram, scenarios: &ScenarioSet, gamma: f64) -> Vec<Row> {
    scenarios
        .points
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            Row::new(
                program.constraint.coefficients(d),
                program.constraint.offset(d) + gamma,
                RowTag::Scenario(i),
            )
        })
        .collect()
}

/// Solves the scenario program at relaxation level `gamma`.
///
/// For fixed scenarios the value is non-increasing in `gamma`; for fixed
/// `gamma` it is non-decreasing under added scenarios. Infeasibility is a
/// status, never silently relaxed.
pub fn solve_scp(
    program: &UncertainProgram,
    scenarios: &ScenarioSet,
    gamma: f64,
) -> Result<ScpOutcome, SolveError> {
    assert!(gamma >= 0.0, "relaxation level must be nonnegative");
    let mut rows = scenario_rows(program, scenarios, gamma);
    rows.extend(program.domain.lp_rows());
    let lp = LinearProgram {
        objective: program.cost.clone(),
        rows,
    };
    match lp::solve_lp(&lp)? {
        LpOutcome::Optimal(solution) => {
            let scenario_duals = solution.duals[..scenarios.len()].to_vec();
            Ok(ScpOutcome::Optimal(ScpSolution {
                x: solution.x,
                value: solution.value,
                scenario_duals,
                gamma,
                scenarios: scenarios.clone(),
            }))
        }
        LpOutcome::Infeasible => Ok(ScpOutcome::Infeasible),
        LpOutcome::Unbounded => Err(SolveError::UnexpectedUnbounded),
    }
}

/// Least-norm optimizer of the scenario program: minimizes `|x|^2` over the
/// first-stage feasible set intersected with `c·x <= first_stage_value`
/// (admitted with slack [`VALUE_CAP_SLACK`]).
///
/// Conditional-gradient iteration with exact line search; stops once the
/// duality gap drops below [`TIE_BREAK_GAP`]. The result is independent of
/// scenario ordering.
pub fn tie_break(
    program: &UncertainProgram,
    scenarios: &ScenarioSet,
    first_stage_value: f64,
) -> Result<Vec<f64>, SolveError> {
    let mut rows = scenario_rows(program, scenarios, 0.0);
    rows.extend(program.domain.lp_rows());
    rows.push(Row::new(
        program.cost.clone(),
        first_stage_value + VALUE_CAP_SLACK,
        RowTag::ValueCap,
    ));

    let mut subproblem = LinearProgram {
        objective: program.cost.clone(),
        rows,
    };

    // Feasible start: a vertex of the capped optimal face.
    let mut x = match lp::solve_lp(&subproblem)? {
        LpOutcome::Optimal(solution) => solution.x,
        LpOutcome::Infeasible => return Err(SolveError::TieBreakInfeasible),
        LpOutcome::Unbounded => return Err(SolveError::UnexpectedUnbounded),
    };

    let mut gap = f64::INFINITY;
    for _iteration in 0..TIE_BREAK_MAX_ITERATIONS {
        let gradient: Vec<f64> = x.iter().map(|&v| 2.0 * v).collect();
        subproblem.objective = gradient.clone();
        let target = match lp::solve_lp(&subproblem)? {
            LpOutcome::Optimal(solution) => solution.x,
            LpOutcome::Infeasible => return Err(SolveError::TieBreakInfeasible),
            LpOutcome::Unbounded => return Err(SolveError::UnexpectedUnbounded),
        };

        let direction: Vec<f64> = target.iter().zip(&x).map(|(s, v)| s - v).collect();
        gap = -dot(&gradient, &direction);
        if gap <= TIE_BREAK_GAP {
            return Ok(x);
        }

        // Exact line search for |x + t*direction|^2 over t in [0, 1].
        let denominator = dot(&direction, &direction);
        if denominator == 0.0 {
            return Ok(x);
        }
        let t = (-dot(&x, &direction) / denominator).clamp(0.0, 1.0);
        for (v, d) in x.iter_mut().zip(&direction) {
            *v += t * d;
        }
    }
    Err(SolveError::TieBreakStalled {
        gap,
        iterations: TIE_BREAK_MAX_ITERATIONS,
    })
}
