//! Dense two-phase primal simplex over inequality rows.
//!
//! Problems arrive as `min c·x  s.t.  a_i·x <= b_i` with free variables.
//! Each variable is split into a difference of nonnegatives and every row
//! receives a slack, giving the classic dense tableau. Bland's rule keeps the
//! pivot sequence finite and deterministic, so identical inputs always return
//! identical optimizers. Dual multipliers are read off the final objective
//! row under the slack columns and satisfy stationarity and complementary
//! slackness against the original rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduced-cost threshold below which a column may enter the basis.
const COST_TOL: f64 = 1e-10;
/// Minimum magnitude of a usable pivot element.
const PIVOT_TOL: f64 = 1e-11;
/// Residual phase-1 objective above which the program is declared infeasible.
const PHASE1_TOL: f64 = 1e-8;

/// Identifies where a row came from so duals can be filtered by origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowTag {
    /// Sampled uncertainty constraint, carrying the scenario position.
    Scenario(usize),
    /// Explicit half-space of the decision polytope.
    Domain(usize),
    /// Box face of the decision polytope.
    Bound { coordinate: usize, upper: bool },
    /// Objective cap `c·x <= J` used by the tie-break second stage.
    ValueCap,
}

/// One inequality `coefficients · x <= bound`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Row {
    pub coefficients: Vec<f64>,
    pub bound: f64,
    pub tag: RowTag,
}

impl Row {
    pub fn new(coefficients: Vec<f64>, bound: f64, tag: RowTag) -> Self {
        Self {
            coefficients,
            bound,
            tag,
        }
    }
}

/// Canonical form `min objective·x  s.t.  rows`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    fn validate(&self) -> Result<(), LpError> {
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        for row in &self.rows {
            if row.coefficients.len() != self.objective.len() {
                return Err(LpError::DimensionMismatch {
                    objective: self.objective.len(),
                    row: row.coefficients.len(),
                });
            }
            if !row.bound.is_finite() || !row.coefficients.iter().all(|v| v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        Ok(())
    }
}

/// Certified optimum with one multiplier per input row.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Nonnegative multiplier per row in input order; zero on slack rows.
    pub duals: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn into_optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(solution) => Some(solution),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("objective has {objective} entries but a row has {row}")]
    DimensionMismatch { objective: usize, row: usize },
    #[error("non-finite coefficient in linear program")]
    NonFinite,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

/// Range of the linear functional `objective` over the rows' feasible set.
#[derive(Debug, Error)]
pub enum RangeError {
    #[error("feasible set is empty")]
    Infeasible,
    #[error("objective is unbounded over the feasible set")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Solves `min objective·x` and `max objective·x` over the same rows.
pub fn value_range(objective: &[f64], rows: &[Row]) -> Result<(f64, f64), RangeError> {
    let lo = extremum(objective.to_vec(), rows)?;
    let negated: Vec<f64> = objective.iter().map(|v| -v).collect();
    let hi = -extremum(negated, rows)?;
    Ok((lo, hi))
}

fn extremum(objective: Vec<f64>, rows: &[Row]) -> Result<f64, RangeError> {
    let lp = LinearProgram {
        objective,
        rows: rows.to_vec(),
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal(solution) => Ok(solution.value),
        LpOutcome::Infeasible => Err(RangeError::Infeasible),
        LpOutcome::Unbounded => Err(RangeError::Unbounded),
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let n = lp.objective.len();
    if lp.rows.is_empty() {
        // With no rows only the zero functional is bounded.
        return Ok(if lp.objective.iter().all(|&c| c == 0.0) {
            LpOutcome::Optimal(LpSolution {
                x: vec![0.0; n],
                value: 0.0,
                duals: Vec::new(),
            })
        } else {
            LpOutcome::Unbounded
        });
    }
    Tableau::build(lp).solve(lp)
}

/// Dense tableau with columns `[u_1..u_n, v_1..v_n, s_1..s_m, artificials]`
/// where `x = u - v` and `s` are the row slacks.
struct Tableau {
    vars: usize,
    rows: usize,
    width: usize,
    split: usize,
    slack_base: usize,
    artificial_base: usize,
    body: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    objective: f64,
    basis: Vec<usize>,
    /// Artificial columns are barred from re-entering once nonbasic.
    banned: Vec<bool>,
}

enum PivotEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let m = lp.rows.len();
        let split = 2 * n;
        let slack_base = split;
        let artificial_base = split + m;
        let artificial_count = lp.rows.iter().filter(|r| r.bound < 0.0).count();
        let width = artificial_base + artificial_count;

        let mut body = vec![0.0; m * width];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut next_artificial = artificial_base;
        for (i, row) in lp.rows.iter().enumerate() {
            let sigma = if row.bound < 0.0 { -1.0 } else { 1.0 };
            let base = i * width;
            for (j, &a) in row.coefficients.iter().enumerate() {
                body[base + j] = sigma * a;
                body[base + n + j] = -sigma * a;
            }
            body[base + slack_base + i] = sigma;
            rhs[i] = sigma * row.bound;
            if sigma < 0.0 {
                body[base + next_artificial] = 1.0;
                basis[i] = next_artificial;
                next_artificial += 1;
            } else {
                basis[i] = slack_base + i;
            }
        }

        Tableau {
            vars: n,
            rows: m,
            width,
            split,
            slack_base,
            artificial_base,
            body,
            rhs,
            cost: vec![0.0; width],
            objective: 0.0,
            basis,
            banned: vec![false; width],
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.body[row * self.width + col]
    }

    fn max_pivots(&self) -> usize {
        50_000 + 50 * (self.rows + self.width)
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        if self.artificial_base < self.width {
            self.load_phase1_costs();
            match self.pivot_loop()? {
                PivotEnd::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
                PivotEnd::Optimal => {}
            }
            if self.objective > PHASE1_TOL {
                return Ok(LpOutcome::Infeasible);
            }
            self.evict_basic_artificials();
            for col in self.artificial_base..self.width {
                self.banned[col] = true;
            }
        }

        self.load_phase2_costs(&lp.objective);
        match self.pivot_loop()? {
            PivotEnd::Unbounded => return Ok(LpOutcome::Unbounded),
            PivotEnd::Optimal => {}
        }

        Ok(LpOutcome::Optimal(self.extract(lp)))
    }

    fn load_phase1_costs(&mut self) {
        // Reduced costs of `min sum(artificials)` for the starting basis:
        // subtract every artificial-basic row from the unit costs.
        for col in 0..self.width {
            let mut value = if col >= self.artificial_base { 1.0 } else { 0.0 };
            for row in 0..self.rows {
                if self.basis[row] >= self.artificial_base {
                    value -= self.at(row, col);
                }
            }
            self.cost[col] = value;
        }
        self.objective = (0..self.rows)
            .filter(|&r| self.basis[r] >= self.artificial_base)
            .map(|r| self.rhs[r])
            .sum();
    }

    fn load_phase2_costs(&mut self, objective: &[f64]) {
        let phase2 = |col: usize| -> f64 {
            if col < self.vars {
                objective[col]
            } else if col < self.split {
                -objective[col - self.vars]
            } else {
                0.0
            }
        };
        for col in 0..self.width {
            let mut value = phase2(col);
            for row in 0..self.rows {
                let basic_cost = phase2(self.basis[row]);
                if basic_cost != 0.0 {
                    value -= basic_cost * self.at(row, col);
                }
            }
            self.cost[col] = value;
        }
        self.objective = (0..self.rows)
            .map(|r| phase2(self.basis[r]) * self.rhs[r])
            .sum();
    }

    fn pivot_loop(&mut self) -> Result<PivotEnd, LpError> {
        let max_pivots = self.max_pivots();
        for _ in 0..max_pivots {
            // Bland's rule: smallest eligible column index enters.
            let entering = (0..self.width)
                .find(|&col| !self.banned[col] && self.cost[col] < -COST_TOL);
            let entering = match entering {
                Some(col) => col,
                None => return Ok(PivotEnd::Optimal),
            };

            // Ratio test; ties broken by the smallest basic variable index.
            let mut leaving: Option<(usize, f64)> = None;
            for row in 0..self.rows {
                let pivot = self.at(row, entering);
                if pivot > PIVOT_TOL {
                    let ratio = self.rhs[row] / pivot;
                    let better = match leaving {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < best_ratio
                                || (ratio == best_ratio
                                    && self.basis[row] < self.basis[best_row])
                        }
                    };
                    if better {
                        leaving = Some((row, ratio));
                    }
                }
            }
            let (pivot_row, _) = match leaving {
                Some(found) => found,
                None => return Ok(PivotEnd::Unbounded),
            };

            self.pivot(pivot_row, entering);
        }
        Err(LpError::IterationLimit(max_pivots))
    }

    fn pivot(&mut self, pivot_row: usize, entering: usize) {
        let width = self.width;
        let pivot = self.at(pivot_row, entering);
        let base = pivot_row * width;
        for col in 0..width {
            self.body[base + col] /= pivot;
        }
        self.rhs[pivot_row] /= pivot;

        for row in 0..self.rows {
            if row == pivot_row {
                continue;
            }
            let factor = self.at(row, entering);
            if factor == 0.0 {
                continue;
            }
            let row_base = row * width;
            for col in 0..width {
                self.body[row_base + col] -= factor * self.body[base + col];
            }
            self.rhs[row] -= factor * self.rhs[pivot_row];
            // Guard the invariant rhs >= 0 against rounding residue.
            if self.rhs[row] < 0.0 && self.rhs[row] > -1e-12 {
                self.rhs[row] = 0.0;
            }
        }

        let factor = self.cost[entering];
        if factor != 0.0 {
            for col in 0..width {
                self.cost[col] -= factor * self.body[base + col];
            }
            // Entering at reduced cost `factor` with step `rhs[pivot_row]`.
            self.objective += factor * self.rhs[pivot_row];
        }

        let left = self.basis[pivot_row];
        if left >= self.artificial_base {
            self.banned[left] = true;
        }
        self.basis[pivot_row] = entering;
    }

    /// Pivots zero-level artificials out of the basis where possible; rows
    /// whose artificial cannot leave are linearly dependent and keep it at
    /// level zero.
    fn evict_basic_artificials(&mut self) {
        for row in 0..self.rows {
            if self.basis[row] < self.artificial_base {
                continue;
            }
            let replacement = (0..self.artificial_base)
                .find(|&col| self.at(row, col).abs() > PIVOT_TOL);
            if let Some(col) = replacement {
                self.pivot(row, col);
            }
        }
    }

    fn extract(&self, lp: &LinearProgram) -> LpSolution {
        let mut x = vec![0.0; self.vars];
        for (row, &column) in self.basis.iter().enumerate() {
            if column < self.vars {
                x[column] += self.rhs[row];
            } else if column < self.split {
                x[column - self.vars] -= self.rhs[row];
            }
        }
        let value = dot(&lp.objective, &x);
        let duals = (0..self.rows)
            .map(|row| self.cost[self.slack_base + row].max(0.0))
            .collect();
        LpSolution { x, value, duals }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
