//! Reachable sets, first-passage times and their discretization.
//!
//! Arrival times are computed by a label-setting shortest-path solver on the
//! grid. Each edge is a straight segment split into pieces no longer than
//! `h`; on each piece the drift is frozen at the piece midpoint and the
//! traversal time is the smallest `τ > 0` with `|δ − τW| ≤ τ`, which is
//! exactly the time a unit-speed control needs to stay on the segment.
//! Reachable-set masks are the sublevel sets of those arrival times.

mod disc;
mod front;
mod grid;
pub mod io;
mod oracle;
mod solver;

use thiserror::Error;

pub use disc::{disc, disc_points, disc_position};
pub use front::{propagate, GridFront};
pub use grid::{default_stencil, Direction, GridConfig, Window};
pub use oracle::{oracle_passage, oracle_passage_many, OracleConfig};
pub(crate) use solver::solve;
pub use solver::{first_passage, passage_times, passage_times_from, segment_time, PassageMap, StopRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReachError {
    #[error("window too small: need a ball of radius {required:.3} around the source, window allows {available:.3}")]
    WindowTooSmall { required: f64, available: f64 },
    #[error("CFL ratio {ratio:.4} exceeds 1/2; reduce dt to at most {max_dt:.5}")]
    Cfl { ratio: f64, max_dt: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("node limit exceeded: graph needs {needed} nodes, limit is {limit}")]
    NodeLimit { needed: usize, limit: usize },
    #[error("point {0:?} lies outside the grid")]
    OutsideGrid([f64; 3]),
    #[error("dimension mismatch: field has d = {field}, grid has d = {grid}")]
    Dimension { field: usize, grid: usize },
}
