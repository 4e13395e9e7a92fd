//! Planar predicates, convex regions and axis-aligned boxes.
//!
//! Everything here works in plain `f64`. Orientation tests use a relative
//! epsilon of [`ORIENTATION_EPS`]; inputs are assumed to be in generic
//! position, exact arithmetic is not attempted.

mod aabox;
mod region;

pub use aabox::{Box4, BoxN};
pub use region::{ConvexRegion, HalfPlane};

use rand::Rng;
use std::fmt;

/// Relative tolerance below which a turn is reported as collinear.
pub const ORIENTATION_EPS: f64 = 1e-12;

/// A point with `D` finite coordinates.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
pub struct Point<const D: usize>(pub [f64; D]);

pub type Point2 = Point<2>;
pub type Point4 = Point<4>;

impl<const D: usize> Point<D> {
    pub fn new(coords: [f64; D]) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Point<2> {
    pub const fn xy(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn dist2(&self, other: &Point2) -> f64 {
        let dx = self.0[0] - other.0[0];
        let dy = self.0[1] - other.0[1];
        dx * dx + dy * dy
    }

    /// Lexicographic (x, then y) comparison.
    pub fn lex_cmp(&self, other: &Point2) -> std::cmp::Ordering {
        self.0[0]
            .total_cmp(&other.0[0])
            .then(self.0[1].total_cmp(&other.0[1]))
    }
}

impl<const D: usize> fmt::Debug for Point<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate segment is not supported in strict mode")]
    DegenerateSegment,
    #[error("halfplane normal must be non-zero and finite")]
    ZeroNormal,
    #[error("region is unbounded; clip it to the working box first")]
    Unbounded,
    #[error("region is empty")]
    Empty,
    #[error("box bounds are inverted on axis {0}")]
    InvertedBox(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Left,
    Right,
    Collinear,
}

/// Sign of the cross product `(b - a) x (c - a)`.
pub fn orientation(a: Point2, b: Point2, c: Point2) -> Orientation {
    let lhs = (b.x() - a.x()) * (c.y() - a.y());
    let rhs = (b.y() - a.y()) * (c.x() - a.x());
    let det = lhs - rhs;
    let bound = ORIENTATION_EPS * (lhs.abs() + rhs.abs());
    if det > bound {
        Orientation::Left
    } else if det < -bound {
        Orientation::Right
    } else {
        Orientation::Collinear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntersectMode {
    /// Proper crossings only: all four turns strictly left or strictly right.
    Strict,
    /// Also reports touching endpoints and collinear overlap.
    Closed,
}

/// Do segments `uw` and `xy` intersect?
pub fn segments_intersect(
    u: Point2,
    w: Point2,
    x: Point2,
    y: Point2,
    mode: IntersectMode,
) -> Result<bool, GeometryError> {
    use Orientation::*;
    match mode {
        IntersectMode::Strict => {
            if u == w || x == y {
                return Err(GeometryError::DegenerateSegment);
            }
            let turns = [
                orientation(u, w, y),
                orientation(x, y, u),
                orientation(w, u, x),
                orientation(y, x, w),
            ];
            Ok(turns.iter().all(|t| *t == Left) || turns.iter().all(|t| *t == Right))
        }
        IntersectMode::Closed => {
            let o1 = orientation(u, w, x);
            let o2 = orientation(u, w, y);
            let o3 = orientation(x, y, u);
            let o4 = orientation(x, y, w);
            let opposite = |a: Orientation, b: Orientation| {
                matches!((a, b), (Left, Right) | (Right, Left))
            };
            if opposite(o1, o2) && opposite(o3, o4) {
                return Ok(true);
            }
            Ok((o1 == Collinear && in_bbox(u, w, x))
                || (o2 == Collinear && in_bbox(u, w, y))
                || (o3 == Collinear && in_bbox(x, y, u))
                || (o4 == Collinear && in_bbox(x, y, w)))
        }
    }
}

fn in_bbox(a: Point2, b: Point2, p: Point2) -> bool {
    p.x() >= a.x().min(b.x())
        && p.x() <= a.x().max(b.x())
        && p.y() >= a.y().min(b.y())
        && p.y() <= a.y().max(b.y())
}

/// Signed shoelace area; positive for counterclockwise vertex order.
pub fn signed_area(vertices: &[Point2]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    twice / 2.0
}

/// A closed region that a tree node can be routed through.
///
/// `delta` regions handed down by a split and the accumulated `poly`
/// regions of tree nodes are both values of this type.
pub trait Region: Clone + fmt::Debug + Send + Sync {
    type Point: Copy + fmt::Debug + Send + Sync;

    /// The working box `[lo, hi]^d`.
    fn working(lo: f64, hi: f64) -> Self;

    /// Closed membership test.
    fn contains(&self, p: &Self::Point) -> bool;

    fn intersect(&self, other: &Self) -> Self;

    fn is_empty(&self) -> bool;

    /// Decomposition handed to an interference oracle. Regions of the
    /// linear model split into triangles; boxes are returned whole.
    fn pieces(&self) -> Vec<Self>;

    /// A uniform random point of the region, if it is bounded and non-empty.
    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Self::Point>;
}
