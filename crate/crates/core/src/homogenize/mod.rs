//! Effective quantities of the front: `θ̄`, the shape `S_t`, the effective
//! Hamiltonian `H̄`, representation-formula solutions, and Monte Carlo
//! experiments measuring fluctuations, bias and convergence rates.

mod directions;
mod edt;
mod experiments;
mod shape;
mod skeleton_error;
mod solve;

use serde::Serialize;
use thiserror::Error;

pub use directions::DirectionGrid;
pub use edt::{hausdorff_masks, squared_edt};
pub use experiments::{
    continuity_experiment, fluctuation_experiment, homog_error_experiment, linear_rate, shape_convergence_experiment,
    ContinuityReport, FluctuationReport, HomogErrorReport, ShapeConvergenceReport,
};
pub use shape::{estimate_theta_bar, scaled_hausdorff, ShapeEstimate, ShapeSet};
pub use skeleton_error::{
    greedy_skeleton, reasonableness, skeleton_error, EmpiricalPassageOracle, FnOracle, PassageOracle,
    Reasonableness, SkeletonErrorReport,
};
pub use solve::{certified_map, solve_u, sup_over_sublevels, u_bar, InitialData};

use crate::field::{Field, FieldError, FieldSpec};
use crate::reachability::ReachError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogError {
    #[error(transparent)]
    Solver(#[from] ReachError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("not supported: {0}")]
    Unsupported(String),
    #[error("not enough successful trials: {0}")]
    NoTrials(String),
    #[error("no passage estimate for increment {0:?}")]
    OracleGap([f64; 3]),
}

/// A trial skipped because its solve failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub seed: u64,
    pub error: String,
}

pub(crate) fn trial_field(spec: &FieldSpec, seed: u64) -> Result<Field, HomogError> {
    Ok(Field::build(spec, seed)?)
}
