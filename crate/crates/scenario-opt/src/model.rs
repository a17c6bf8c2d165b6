//! Problem and scenario data model shared by the solver modules.
//!
//! An [`UncertainProgram`] bundles the cost vector, a certified-compact
//! decision polytope, a constraint oracle affine in the decision, and a
//! counter-based sampler over the uncertainty space. All types are immutable
//! after construction and safe to share across parallel workers.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpOutcome, Row, RowTag};
use crate::rng;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("decision polytope is empty")]
    EmptyDomain,
    #[error("decision polytope is unbounded in coordinate {coordinate}")]
    UnboundedDomain { coordinate: usize },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("affine table needs at least one entry")]
    EmptyTable,
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Compact convex decision set, given by half-spaces and an optional box.
///
/// Construction certifies nonemptiness with a feasibility solve and
/// boundedness with a min/max solve per coordinate; unbounded or empty
/// descriptions are rejected.
#[derive(Clone, Debug)]
pub struct Polytope {
    dimension: usize,
    half_spaces: Vec<(Vec<f64>, f64)>,
    bounds: Option<Vec<(f64, f64)>>,
    coordinate_ranges: Vec<(f64, f64)>,
}

impl Polytope {
    pub fn new(
        dimension: usize,
        half_spaces: Vec<(Vec<f64>, f64)>,
        bounds: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, ModelError> {
        for (normal, _) in &half_spaces {
            if normal.len() != dimension {
                return Err(ModelError::DimensionMismatch {
                    context: format!(
                        "half-space has {} coefficients in dimension {dimension}",
                        normal.len()
                    ),
                });
            }
        }
        if let Some(bounds) = &bounds {
            if bounds.len() != dimension {
                return Err(ModelError::DimensionMismatch {
                    context: format!(
                        "box has {} coordinate ranges in dimension {dimension}",
                        bounds.len()
                    ),
                });
            }
        }
        let mut polytope = Polytope {
            dimension,
            half_spaces,
            bounds,
            coordinate_ranges: Vec::new(),
        };
        polytope.certify()?;
        Ok(polytope)
    }

    /// Axis-aligned box.
    pub fn from_box(bounds: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        Self::new(bounds.len(), Vec::new(), Some(bounds))
    }

    fn certify(&mut self) -> Result<(), ModelError> {
        let rows = self.lp_rows();
        let feasibility = LinearProgram {
            objective: vec![0.0; self.dimension],
            rows: rows.clone(),
        };
        match lp::solve_lp(&feasibility)? {
            LpOutcome::Infeasible => return Err(ModelError::EmptyDomain),
            LpOutcome::Optimal(_) | LpOutcome::Unbounded => {}
        }

        let mut ranges = Vec::with_capacity(self.dimension);
        for coordinate in 0..self.dimension {
            let mut objective = vec![0.0; self.dimension];
            objective[coordinate] = 1.0;
            let lo = match lp::solve_lp(&LinearProgram {
                objective: objective.clone(),
                rows: rows.clone(),
            })? {
                LpOutcome::Optimal(solution) => solution.value,
                _ => return Err(ModelError::UnboundedDomain { coordinate }),
            };
            objective[coordinate] = -1.0;
            let hi = match lp::solve_lp(&LinearProgram {
                objective,
                rows: rows.clone(),
            })? {
                LpOutcome::Optimal(solution) => -solution.value,
                _ => return Err(ModelError::UnboundedDomain { coordinate }),
            };
            ranges.push((lo, hi));
        }
        self.coordinate_ranges = ranges;
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_spaces(&self) -> &[(Vec<f64>, f64)] {
        &self.half_spaces
    }

    /// Certified `[min x_i, max x_i]` per coordinate.
    pub fn coordinate_ranges(&self) -> &[(f64, f64)] {
        &self.coordinate_ranges
    }

    /// Lowers the polytope to solver rows: explicit half-spaces first, then
    /// finite box faces as tagged rows.
    pub fn lp_rows(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = self
            .half_spaces
            .iter()
            .enumerate()
            .map(|(i, (normal, offset))| Row::new(normal.clone(), *offset, RowTag::Domain(i)))
            .collect();
        if let Some(bounds) = &self.bounds {
            for (coordinate, &(lo, hi)) in bounds.iter().enumerate() {
                if hi.is_finite() {
                    let mut normal = vec![0.0; self.dimension];
                    normal[coordinate] = 1.0;
                    rows.push(Row::new(
                        normal,
                        hi,
                        RowTag::Bound {
                            coordinate,
                            upper: true,
                        },
                    ));
                }
                if lo.is_finite() {
                    let mut normal = vec![0.0; self.dimension];
                    normal[coordinate] = -1.0;
                    rows.push(Row::new(
                        normal,
                        -lo,
                        RowTag::Bound {
                            coordinate,
                            upper: false,
                        },
                    ));
                }
            }
        }
        rows
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dimension
            && self
                .lp_rows()
                .iter()
                .all(|row| lp::dot(&row.coefficients, x) <= row.bound + tol)
    }
}

/// Constraint family `f(x, d) = a(d)·x - b(d)`, affine in the decision.
pub trait ConstraintOracle: Send + Sync {
    fn dimension(&self) -> usize;

    /// Coefficient vector `a(d)`.
    fn coefficients(&self, d: f64) -> Vec<f64>;

    /// Offset `b(d)`.
    fn offset(&self, d: f64) -> f64;

    /// `f(x, d)`.
    fn value(&self, x: &[f64], d: f64) -> f64 {
        lp::dot(&self.coefficients(d), x) - self.offset(d)
    }

    /// Closed-form `sup_d f(x, d)` when the family knows its worst case.
    fn sup_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Tangent cuts of the unit disk: `f(x, d) = x_1 cos d + x_2 sin d - 1`,
/// intended for `d` uniform over `[0, 2*pi]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitCircleCuts;

impl ConstraintOracle for UnitCircleCuts {
    fn dimension(&self) -> usize {
        2
    }

    fn coefficients(&self, d: f64) -> Vec<f64> {
        vec![d.cos(), d.sin()]
    }

    fn offset(&self, _d: f64) -> f64 {
        1.0
    }

    fn value(&self, x: &[f64], d: f64) -> f64 {
        x[0] * d.cos() + x[1] * d.sin() - 1.0
    }

    fn sup_value(&self, x: &[f64]) -> Option<f64> {
        Some((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0)
    }
}

/// Scalar ceiling `f(x, d) = x - d`, intended for `d` uniform over `[0, 1]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarUpperBound;

impl ConstraintOracle for ScalarUpperBound {
    fn dimension(&self) -> usize {
        1
    }

    fn coefficients(&self, _d: f64) -> Vec<f64> {
        vec![1.0]
    }

    fn offset(&self, d: f64) -> f64 {
        d
    }

    fn value(&self, x: &[f64], d: f64) -> f64 {
        x[0] - d
    }

    fn sup_value(&self, x: &[f64]) -> Option<f64> {
        // The infimum of d over [0, 1] is 0.
        Some(x[0])
    }
}

/// Finite table of affine cuts; `d` selects the entry `floor(d)`, clamped to
/// the table range, so a `uniform_interval` sampler over `[0, len)` draws
/// entries uniformly.
#[derive(Clone, Debug)]
pub struct AffineTable {
    entries: Vec<(Vec<f64>, f64)>,
}

impl AffineTable {
    pub fn new(entries: Vec<(Vec<f64>, f64)>) -> Result<Self, ModelError> {
        if entries.is_empty() {
            return Err(ModelError::EmptyTable);
        }
        let dimension = entries[0].0.len();
        if entries.iter().any(|(a, _)| a.len() != dimension) {
            return Err(ModelError::DimensionMismatch {
                context: "affine table entries differ in width".to_string(),
            });
        }
        Ok(Self { entries })
    }

    fn index_for(&self, d: f64) -> usize {
        let raw = d.floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.entries.len() - 1)
        }
    }
}

impl ConstraintOracle for AffineTable {
    fn dimension(&self) -> usize {
        self.entries[0].0.len()
    }

    fn coefficients(&self, d: f64) -> Vec<f64> {
        self.entries[self.index_for(d)].0.clone()
    }

    fn offset(&self, d: f64) -> f64 {
        self.entries[self.index_for(d)].1
    }

    fn sup_value(&self, x: &[f64]) -> Option<f64> {
        self.entries
            .iter()
            .map(|(a, b)| lp::dot(a, x) - b)
            .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
    }
}

/// Oracle assembled from closures, for constraint families built at run time.
pub struct ClosureOracle {
    dimension: usize,
    coefficients: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    offset: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    sup: Option<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl ClosureOracle {
    pub fn new(
        dimension: usize,
        coefficients: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        offset: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            coefficients: Box::new(coefficients),
            offset: Box::new(offset),
            sup: None,
        }
    }

    pub fn with_sup(mut self, sup: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.sup = Some(Box::new(sup));
        self
    }
}

impl ConstraintOracle for ClosureOracle {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn coefficients(&self, d: f64) -> Vec<f64> {
        (self.coefficients)(d)
    }

    fn offset(&self, d: f64) -> f64 {
        (self.offset)(d)
    }

    fn sup_value(&self, x: &[f64]) -> Option<f64> {
        self.sup.as_ref().map(|f| f(x))
    }
}

/// Uncertainty distribution whose draws are pure functions of (seed, index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampler {
    UniformInterval { lo: f64, hi: f64 },
}

impl Sampler {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Sampler::UniformInterval { lo, hi }
    }

    pub fn draw(&self, seed: u64, index: u64) -> f64 {
        match self {
            Sampler::UniformInterval { lo, hi } => lo + (hi - lo) * rng::draw_unit(seed, index),
        }
    }

    pub fn description(&self) -> String {
        match self {
            Sampler::UniformInterval { lo, hi } => format!("uniform on [{lo}, {hi})"),
        }
    }
}

/// Ordered scenarios together with the seed that produced them, when any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub points: Vec<f64>,
    pub seed: Option<u64>,
}

impl ScenarioSet {
    pub fn from_points(points: Vec<f64>) -> Self {
        Self { points, seed: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draws `count` i.i.d. scenarios from stream positions `1..=count`.
///
/// Deterministic in `(sampler, seed, count)`; a shorter draw is always a
/// prefix of a longer one with the same seed.
pub fn sample_scenarios(sampler: &Sampler, count: usize, seed: u64) -> ScenarioSet {
    assert!(count >= 1, "scenario sets need at least one draw");
    let points = (1..=count as u64).map(|i| sampler.draw(seed, i)).collect();
    ScenarioSet {
        points,
        seed: Some(seed),
    }
}

/// The uncertain program `min c·x  s.t.  f(x, d) <= 0` over a compact `X`.
#[derive(Clone)]
pub struct UncertainProgram {
    pub cost: Vec<f64>,
    pub domain: Polytope,
    pub constraint: Arc<dyn ConstraintOracle>,
    pub sampler: Sampler,
}

impl UncertainProgram {
    pub fn new(
        cost: Vec<f64>,
        domain: Polytope,
        constraint: Arc<dyn ConstraintOracle>,
        sampler: Sampler,
    ) -> Result<Self, ModelError> {
        if cost.len() != domain.dimension() || constraint.dimension() != domain.dimension() {
            return Err(ModelError::DimensionMismatch {
                context: format!(
                    "cost has {} entries, domain dimension {}, oracle dimension {}",
                    cost.len(),
                    domain.dimension(),
                    constraint.dimension()
                ),
            });
        }
        Ok(Self {
            cost,
            domain,
            constraint,
            sampler,
        })
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn constraint_value(&self, x: &[f64], d: f64) -> f64 {
        self.constraint.value(x, d)
    }
}

impl std::fmt::Debug for UncertainProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UncertainProgram")
            .field("cost", &self.cost)
            .field("dimension", &self.dimension())
            .field("sampler", &self.sampler)
            .finish()
    }
}

/// Monte Carlo estimate of the violation probability `P[f(x, d) > 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViolationEstimate {
    pub violations: usize,
    pub samples: usize,
}

impl ViolationEstimate {
    pub fn rate(&self) -> f64 {
        self.violations as f64 / self.samples as f64
    }

    /// Three-sigma binomial half-width around the estimate.
    pub fn three_sigma(&self) -> f64 {
        let p = self.rate();
        3.0 * (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

pub fn estimate_violation(
    program: &UncertainProgram,
    x: &[f64],
    samples: usize,
    seed: u64,
) -> ViolationEstimate {
    assert!(samples >= 1, "violation estimation needs at least one draw");
    let violations = (1..=samples as u64)
        .filter(|&i| {
            let d = program.sampler.draw(seed, i);
            program.constraint_value(x, d) > 0.0
        })
        .count();
    ViolationEstimate {
        violations,
        samples,
    }
}
