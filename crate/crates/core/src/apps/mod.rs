//! Query problems wired to the tree's oracle contracts.
//!
//! Each app provides an `O(log n)`-style backup structure, an interference
//! oracle and a linear-scan reference used to check both.

mod kdtree;
mod polygon;
mod postoffice;
mod rangetree;
mod rectcount;

pub use kdtree::KdTree;
pub use polygon::{ConvexPolygon, Membership};
pub use postoffice::PostOffice;
pub use rangetree::RangeTree;
pub use rectcount::RectCount;

use thiserror::Error;

/// Data coordinates of generated instances lie in `[0, DATA_SCALE]^2`.
pub const DATA_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AppError {
    #[error("need at least {0} input points")]
    TooFew(usize),
    #[error("input point {0} is not finite")]
    NotFinite(usize),
    #[error("polygon is not strictly convex and counterclockwise at vertex {0}")]
    NotConvex(usize),
    #[error("sites {0} and {1} coincide")]
    DuplicateSite(usize, usize),
}
