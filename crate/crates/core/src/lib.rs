//! Numerical laboratory for front propagation in random divergence-free
//! environments: field generation, reachable sets and first-passage times,
//! good-site percolation, subadditive limit machinery, homogenization
//! experiments and a batch harness.

pub mod field;
pub mod geom;
pub mod harness;
pub mod homogenize;
pub mod percolation;
pub mod reachability;
pub mod seed;
pub mod skeleton;
pub mod stats;
pub mod subadditive;

pub use field::{Field, FieldBounds, FieldError, FieldSpec};
pub use geom::Point;
