//! Subadditive limit machinery: rearrangement of bounded vectors, convex
//! hull certificates and the skeleton-to-general approximation reduction,
//! all runnable against any [`SubadditiveOracle`].

mod alexander;
mod hull;
mod oracle;
mod rearrange;

use thiserror::Error;

pub use alexander::{
    alexander_reduce, alexander_step1, gap_from_skeleton, straight_skeleton, GapLevel, GapReport, HullCertificate,
    ReduceReport,
};
pub use hull::{caratheodory, convex_feasible};
pub use oracle::{oracle_by_name, GoodSet, GoodViolation, NormPlusLog, NormPlusRoot, Polyhedral, SubadditiveOracle};
pub use rearrange::{best_prefix_deviation, prefix_deviation, rearrange, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubadditiveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("certificate infeasible: {0}")]
    Infeasible(String),
    #[error("target lies outside the convex hull (residual {residual:.3e})")]
    OutsideHull { residual: f64 },
    #[error("skeleton increment {index} is not good: {reason}")]
    BadIncrement { index: usize, reason: GoodViolation },
    #[error("certificate was built for {built:?}, not {asked:?}")]
    StaleCertificate { built: [i64; 3], asked: [i64; 3] },
    #[error("no skeleton produced for {0:?}")]
    NoSkeleton([i64; 3]),
}
