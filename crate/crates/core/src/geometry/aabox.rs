use super::{GeometryError, Point, Region};
use rand::Rng;

/// Closed axis-aligned box with possibly infinite bounds.
///
/// A box produced by [`Region::intersect`] may have `lo > hi` on some axis;
/// such a box is empty. Boxes built with [`BoxN::new`] are always valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxN<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

pub type Box4 = BoxN<4>;

impl<const D: usize> BoxN<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Result<Self, GeometryError> {
        for i in 0..D {
            if lo[i].is_nan() || hi[i].is_nan() || lo[i] > hi[i] {
                return Err(GeometryError::InvertedBox(i));
            }
        }
        Ok(BoxN { lo, hi })
    }

    pub fn everything() -> Self {
        BoxN {
            lo: [f64::NEG_INFINITY; D],
            hi: [f64::INFINITY; D],
        }
    }

    /// `{x : x[axis] <= value}`.
    pub fn below(axis: usize, value: f64) -> Self {
        let mut b = Self::everything();
        b.hi[axis] = value;
        b
    }

    /// `{x : x[axis] >= value}`.
    pub fn above(axis: usize, value: f64) -> Self {
        let mut b = Self::everything();
        b.lo[axis] = value;
        b
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|i| self.lo[i] <= p.0[i] && p.0[i] <= self.hi[i])
    }

    pub fn is_empty(&self) -> bool {
        (0..D).any(|i| self.lo[i] > self.hi[i])
    }

    /// Does the hyperplane `x[axis] = value` meet the open interior?
    pub fn interior_meets_hyperplane(&self, axis: usize, value: f64) -> bool {
        !self.is_empty()
            && (0..D).all(|i| self.lo[i] < self.hi[i])
            && self.lo[axis] < value
            && value < self.hi[axis]
    }
}

impl<const D: usize> Region for BoxN<D> {
    type Point = Point<D>;

    fn working(lo: f64, hi: f64) -> Self {
        BoxN {
            lo: [lo; D],
            hi: [hi; D],
        }
    }

    fn contains(&self, p: &Point<D>) -> bool {
        BoxN::contains(self, p)
    }

    fn intersect(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..D {
            out.lo[i] = out.lo[i].max(other.lo[i]);
            out.hi[i] = out.hi[i].min(other.hi[i]);
        }
        out
    }

    fn is_empty(&self) -> bool {
        BoxN::is_empty(self)
    }

    fn pieces(&self) -> Vec<Self> {
        vec![*self]
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point<D>> {
        if self.is_empty() || (0..D).any(|i| !self.lo[i].is_finite() || !self.hi[i].is_finite()) {
            return None;
        }
        let mut c = [0.0; D];
        for (i, x) in c.iter_mut().enumerate() {
            *x = self.lo[i] + rng.random::<f64>() * (self.hi[i] - self.lo[i]);
        }
        Some(Point(c))
    }
}
