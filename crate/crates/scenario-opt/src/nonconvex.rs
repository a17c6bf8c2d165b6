//! Union-of-subprograms scenario solving and its interval aggregation.
//!
//! A family of subprograms shares one objective, one uncertainty space, and
//! one scenario draw; the union program picks the feasible member with the
//! smallest scenario value. Binary decision variables enter by enumerating
//! all bit assignments into one member per assignment, and the feasibility
//! sample size for the union is the double-sum binomial bound.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{
    aposteriori_interval, apriori_interval, BoundsError, ConfidenceReport, IntervalBranch,
    ReportKind, SlaterConstant, Ulb,
};
use crate::lp::value_range;
use crate::model::{ConstraintOracle, Polytope, Sampler, ScenarioSet, UncertainProgram};
use crate::sample_size::{sample_size_union, SampleSizeError};
use crate::scenario::{solve_scp, ScpOutcome, SolveError};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("a subprogram family needs at least one member")]
    Empty,
    #[error("family members must share one sampler")]
    MixedSamplers,
    #[error("family members must share the decision dimension")]
    MixedDimensions,
    #[error("family members must share the objective vector")]
    MixedObjectives,
    #[error("violation level of member {member} must lie in (0, 1], got {eps}")]
    InvalidEpsilon { member: usize, eps: f64 },
    #[error("binary expansion over {0} bits would enumerate too many members (limit 20)")]
    TooManyBits(usize),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// One subprogram: its own decision set and constraint family, plus the
/// certificates needed for per-member intervals when available.
pub struct FamilyMember {
    pub program: UncertainProgram,
    pub eps: f64,
    pub slater: Option<SlaterConstant>,
    pub ulb: Option<Ulb>,
}

impl FamilyMember {
    pub fn new(program: UncertainProgram, eps: f64) -> Self {
        Self {
            program,
            eps,
            slater: None,
            ulb: None,
        }
    }

    pub fn with_certificates(mut self, slater: SlaterConstant, ulb: Ulb) -> Self {
        self.slater = Some(slater);
        self.ulb = Some(ulb);
        self
    }
}

/// Validated family: all members share the sampler, the objective, and the
/// decision dimension (the union sample bound uses a single dimension).
pub struct SubprogramFamily {
    members: Vec<FamilyMember>,
}

impl SubprogramFamily {
    pub fn new(members: Vec<FamilyMember>) -> Result<Self, FamilyError> {
        let first = members.first().ok_or(FamilyError::Empty)?;
        let sampler = first.program.sampler.clone();
        let dimension = first.program.dimension();
        let objective = first.program.cost.clone();
        for (index, member) in members.iter().enumerate() {
            if member.program.sampler != sampler {
                return Err(FamilyError::MixedSamplers);
            }
            if member.program.dimension() != dimension {
                return Err(FamilyError::MixedDimensions);
            }
            if member.program.cost != objective {
                return Err(FamilyError::MixedObjectives);
            }
            if !(member.eps > 0.0 && member.eps <= 1.0) {
                return Err(FamilyError::InvalidEpsilon {
                    member: index,
                    eps: member.eps,
                });
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.members[0].program.dimension()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.eps).collect()
    }

    /// Attaches interval certificates to member `index`.
    pub fn set_certificates(&mut self, index: usize, slater: SlaterConstant, ulb: Ulb) {
        self.members[index].slater = Some(slater);
        self.members[index].ulb = Some(ulb);
    }
}

/// Solution of the union scenario program.
#[derive(Clone, Debug)]
pub struct SpSolution {
    /// Index of the selected member (smallest value, ties to smallest index).
    pub winner: usize,
    pub x: Vec<f64>,
    pub value: f64,
    pub member_outcomes: Vec<ScpOutcome>,
}

#[derive(Clone, Debug)]
pub enum SpOutcome {
    Optimal(SpSolution),
    Infeasible,
}

impl SpOutcome {
    pub fn into_optimal(self) -> Option<SpSolution> {
        match self {
            SpOutcome::Optimal(solution) => Some(solution),
            SpOutcome::Infeasible => None,
        }
    }
}

/// Solves every member on the same scenario set and keeps the best feasible
/// one; infeasible members are skipped, and only an all-infeasible family
/// makes the union infeasible.
pub fn solve_sp(
    family: &SubprogramFamily,
    scenarios: &ScenarioSet,
) -> Result<SpOutcome, SolveError> {
    let outcomes: Vec<ScpOutcome> = family
        .members
        .par_iter()
        .map(|member| solve_scp(&member.program, scenarios, 0.0))
        .collect::<Result<_, _>>()?;

    let mut winner: Option<(usize, f64)> = None;
    for (index, outcome) in outcomes.iter().enumerate() {
        if let ScpOutcome::Optimal(solution) = outcome {
            let better = match winner {
                None => true,
                Some((_, best)) => solution.value < best,
            };
            if better {
                winner = Some((index, solution.value));
            }
        }
    }

    Ok(match winner {
        Some((index, value)) => {
            let x = outcomes[index]
                .optimal()
                .expect("winner is optimal")
                .x
                .clone();
            SpOutcome::Optimal(SpSolution {
                winner: index,
                x,
                value,
                member_outcomes: outcomes,
            })
        }
        None => SpOutcome::Infeasible,
    })
}

/// Enumerates every assignment of `bits` binary variables into a family
/// member, in lexicographic order of the assignment read as a big-endian
/// integer. All members share the decision set, objective, sampler, and
/// violation level.
pub fn binary_expansion(
    objective: Vec<f64>,
    domain: Polytope,
    sampler: Sampler,
    oracle_for: impl Fn(&[bool]) -> Arc<dyn ConstraintOracle>,
    bits: usize,
    eps: f64,
) -> Result<SubprogramFamily, FamilyError> {
    if bits > 20 {
        return Err(FamilyError::TooManyBits(bits));
    }
    let count = 1usize << bits;
    let mut members = Vec::with_capacity(count);
    for k in 0..count {
        let assignment: Vec<bool> = (0..bits).map(|j| (k >> (bits - 1 - j)) & 1 == 1).collect();
        let program = UncertainProgram::new(
            objective.clone(),
            domain.clone(),
            oracle_for(&assignment),
            sampler.clone(),
        )?;
        members.push(FamilyMember::new(program, eps));
    }
    SubprogramFamily::new(members)
}

/// Feasibility sample size for the union, Theorem-style double-sum bound.
pub fn union_feasibility_n(
    family: &SubprogramFamily,
    beta: f64,
) -> Result<u64, SampleSizeError> {
    sample_size_union(&family.levels(), beta, family.dimension() as u64)
}

/// Aggregated intervals for the union program.
///
/// Per-member intervals are evaluated at each member's own level (or at
/// `eps_override` for every member when given) and aggregated by the maximum
/// over members. Members lacking certificates leave the a priori aggregate
/// unavailable; members that were infeasible on this draw leave the
/// a posteriori aggregate unavailable. For heterogeneous levels the
/// aggregate reports record the largest member level and set
/// `heterogeneous_eps`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct UnionReport {
    pub value: f64,
    pub beta: f64,
    pub n_used: u64,
    pub n_required: Option<u64>,
    pub guaranteed: bool,
    pub member_eps: Vec<f64>,
    pub member_apriori: Vec<Option<f64>>,
    pub member_aposteriori: Vec<Option<f64>>,
    pub missing_apriori: Vec<usize>,
    pub missing_aposteriori: Vec<usize>,
    pub heterogeneous_eps: bool,
    pub rp_apriori: Option<ConfidenceReport>,
    pub cp_apriori: Option<ConfidenceReport>,
    pub cp_aposteriori: Option<ConfidenceReport>,
}

pub fn union_report(
    solution: &SpSolution,
    family: &SubprogramFamily,
    beta: f64,
    n_used: u64,
    eps_override: Option<f64>,
) -> Result<UnionReport, BoundsError> {
    let levels: Vec<f64> = family
        .members()
        .iter()
        .map(|member| eps_override.unwrap_or(member.eps))
        .collect();
    let heterogeneous = levels.windows(2).any(|pair| pair[0] != pair[1]);
    let report_eps = levels.iter().cloned().fold(f64::MIN, f64::max);

    let mut member_apriori = Vec::with_capacity(family.len());
    let mut member_aposteriori = Vec::with_capacity(family.len());
    let mut missing_apriori = Vec::new();
    let mut missing_aposteriori = Vec::new();

    for (index, member) in family.members().iter().enumerate() {
        let eps = levels[index];
        let range = match &member.ulb {
            Some(_) => {
                let (lo, hi) =
                    value_range(&member.program.cost, &member.program.domain.lp_rows())?;
                Some(hi - lo)
            }
            None => None,
        };
        match (&member.slater, &member.ulb, range) {
            (Some(slater), Some(ulb), Some(range)) => {
                let interval = apriori_interval(slater.l_sp(), ulb, eps, range);
                member_apriori.push(Some(interval.width));
            }
            _ => {
                member_apriori.push(None);
                missing_apriori.push(index);
            }
        }
        match (&member.ulb, range, solution.member_outcomes[index].optimal()) {
            (Some(ulb), Some(range), Some(scp)) => {
                let interval = aposteriori_interval(scp.dual_l1(), ulb, eps, range);
                member_aposteriori.push(Some(interval.width));
            }
            _ => {
                member_aposteriori.push(None);
                missing_aposteriori.push(index);
            }
        }
    }

    let n_required = union_feasibility_n(family, beta).ok();
    let guaranteed = n_required.is_some_and(|required| n_used >= required);
    let aggregate = |widths: &[Option<f64>]| -> Option<f64> {
        widths
            .iter()
            .map(|w| *w)
            .collect::<Option<Vec<f64>>>()
            .map(|all| all.into_iter().fold(0.0, f64::max))
    };
    let build = |kind: ReportKind, width: f64, lower: f64, upper: f64| ConfidenceReport {
        kind,
        lower,
        upper,
        eps: report_eps,
        beta,
        n_required,
        n_used,
        scp_value: solution.value,
        interval_width: width,
        // Aggregates mix member branches; report the conservative one.
        branch: IntervalBranch::Ulb,
        guaranteed,
    };

    let rp_apriori = aggregate(&member_apriori).map(|width| {
        build(
            ReportKind::RpAPriori,
            width,
            solution.value,
            solution.value + width,
        )
    });
    let cp_apriori = aggregate(&member_apriori).map(|width| {
        build(
            ReportKind::CpAPriori,
            width,
            solution.value - width,
            solution.value,
        )
    });
    let cp_aposteriori = aggregate(&member_aposteriori).map(|width| {
        build(
            ReportKind::CpAPosteriori,
            width,
            solution.value - width,
            solution.value,
        )
    });

    Ok(UnionReport {
        value: solution.value,
        beta,
        n_used,
        n_required,
        guaranteed,
        member_eps: levels,
        member_apriori,
        member_aposteriori,
        missing_apriori,
        missing_aposteriori,
        heterogeneous_eps: heterogeneous,
        rp_apriori,
        cp_apriori,
        cp_aposteriori,
    })
}
