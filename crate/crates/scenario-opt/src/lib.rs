//! Scenario optimization toolkit.
//!
//! Solves scenario convex programs for uncertain linear objectives with
//! affine-in-decision constraint families, and quantifies how far the
//! scenario optimal value can sit from the robust and chance-constrained
//! optimal values it approximates:
//!
//! - [`sample_size`]: exact binomial-tail sample bounds and their inversion,
//!   including the union (double-sum) variant for non-convex programs.
//! - [`lp`]: dense two-phase simplex returning certified primal optimizers
//!   and dual multipliers.
//! - [`scenario`]: scenario program assembly, dual l1 extraction, and the
//!   least-norm tie-break second stage.
//! - [`bounds`]: uniform level-set bounds, Slater constants, and the
//!   a priori / a posteriori confidence intervals.
//! - [`nonconvex`]: union-of-subprograms solving with binary-variable
//!   expansion and aggregated intervals.
//! - [`harness`]: the analytically solvable benchmark sweep and the
//!   robust-infeasibility counterexample.

pub mod bounds;
pub mod config;
pub mod harness;
pub mod lp;
pub mod model;
pub mod nonconvex;
pub mod rng;
pub mod sample_size;
pub mod scenario;

pub use bounds::{
    aposteriori_interval, apriori_interval, slater_constant, ConfidenceReport, SlaterCertificate,
    SlaterConstant, Ulb,
};
pub use model::{
    estimate_violation, sample_scenarios, Polytope, Sampler, ScenarioSet, UncertainProgram,
};
pub use sample_size::{binomial_tail, sample_size, sample_size_union};
pub use scenario::{solve_scp, tie_break, ScpOutcome, ScpSolution};
