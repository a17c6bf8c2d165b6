//! JSON problem descriptions consumed by the command-line tools.
//!
//! A problem file names the dimension, cost vector, polytope (rows plus an
//! optional box), a built-in constraint family, and a sampler. A family file
//! lists member problems with their violation levels and optional interval
//! certificates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{slater_constant, BoundsError, SlaterConstant, Ulb};
use crate::model::{
    AffineTable, ModelError, Polytope, Sampler, UncertainProgram, UnitCircleCuts,
};
use crate::nonconvex::{FamilyError, FamilyMember, SubprogramFamily};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid problem description: {0}")]
    Invalid(String),
    #[error("slater point needs a worst-case value: none given and the oracle has no closed form")]
    MissingSupValue,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalfSpaceConfig {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PolytopeConfig {
    #[serde(default)]
    pub rows: Vec<HalfSpaceConfig>,
    #[serde(default, rename = "box")]
    pub box_bounds: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstraintConfig {
    /// `x1 cos d + x2 sin d <= 1`, the built-in benchmark family.
    Example1,
    /// Tabulated cuts selected by `floor(d)`.
    AffineTable { entries: Vec<HalfSpaceConfig> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub n: usize,
    pub c: Vec<f64>,
    #[serde(default)]
    pub polytope: PolytopeConfig,
    pub constraint: ConstraintConfig,
    pub sampler: Sampler,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<UncertainProgram, ConfigError> {
        if self.c.len() != self.n {
            return Err(ConfigError::Invalid(format!(
                "cost vector has {} entries for dimension {}",
                self.c.len(),
                self.n
            )));
        }
        let half_spaces = self
            .polytope
            .rows
            .iter()
            .map(|row| (row.a.clone(), row.b))
            .collect();
        let bounds = self
            .polytope
            .box_bounds
            .as_ref()
            .map(|b| b.iter().map(|&[lo, hi]| (lo, hi)).collect());
        let domain = Polytope::new(self.n, half_spaces, bounds)?;

        let constraint: Arc<dyn crate::model::ConstraintOracle> = match &self.constraint {
            ConstraintConfig::Example1 => {
                if self.n != 2 {
                    return Err(ConfigError::Invalid(
                        "the benchmark constraint needs dimension 2".into(),
                    ));
                }
                Arc::new(UnitCircleCuts)
            }
            ConstraintConfig::AffineTable { entries } => {
                let table = AffineTable::new(
                    entries.iter().map(|e| (e.a.clone(), e.b)).collect(),
                )?;
                Arc::new(table)
            }
        };

        Ok(UncertainProgram::new(
            self.c.clone(),
            domain,
            constraint,
            self.sampler.clone(),
        )?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SlaterConfig {
    /// Strictly feasible point; `sup` is `sup_d f(x0, d)` and may be omitted
    /// when the constraint family has a closed-form worst case.
    Point {
        x0: Vec<f64>,
        #[serde(default)]
        sup: Option<f64>,
    },
    /// Min-max structure: perturbation constant 1.
    MinMax,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UlbConfig {
    pub l_d: f64,
    pub kappa: f64,
    pub p: f64,
}

impl UlbConfig {
    pub fn build(&self) -> Result<Ulb, ConfigError> {
        Ok(Ulb::new(self.l_d, self.kappa, self.p)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyMemberConfig {
    pub problem: ProblemConfig,
    #[serde(rename = "eps_k")]
    pub eps: f64,
    #[serde(default)]
    pub slater: Option<SlaterConfig>,
    #[serde(default)]
    pub ulb: Option<UlbConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub members: Vec<FamilyMemberConfig>,
}

/// Resolves a Slater description against a built program.
pub fn build_slater(
    config: &SlaterConfig,
    program: &UncertainProgram,
) -> Result<SlaterConstant, ConfigError> {
    match config {
        SlaterConfig::MinMax => Ok(SlaterConstant::MinMax),
        SlaterConfig::Point { x0, sup } => {
            let sup_value = match sup {
                Some(value) => *value,
                None => program
                    .constraint
                    .sup_value(x0)
                    .ok_or(ConfigError::MissingSupValue)?,
            };
            Ok(SlaterConstant::Certified(slater_constant(
                program,
                x0.clone(),
                sup_value,
            )?))
        }
    }
}

impl FamilyConfig {
    pub fn build(&self) -> Result<SubprogramFamily, ConfigError> {
        let mut members = Vec::with_capacity(self.members.len());
        for member in &self.members {
            let program = member.problem.build()?;
            let mut built = FamilyMember::new(program, member.eps);
            if let Some(slater) = &member.slater {
                built.slater = Some(build_slater(slater, &built.program)?);
            }
            if let Some(ulb) = &member.ulb {
                built.ulb = Some(ulb.build()?);
            }
            members.push(built);
        }
        Ok(SubprogramFamily::new(members)?)
    }
}
