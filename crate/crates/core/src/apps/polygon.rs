use super::{AppError, DATA_SCALE};
use crate::geometry::{
    orientation, segments_intersect, ConvexRegion, IntersectMode, Orientation, Point2,
};
use crate::tree::{BackupOracle, InterferenceOracle, Verdict};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
}

impl From<bool> for Membership {
    fn from(inside: bool) -> Self {
        if inside {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }
}

/// Point-in-convex-polygon with a fan binary search from an interior anchor.
#[derive(Debug, Clone)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    anchor: Point2,
    /// `true` for vertices whose angle around the anchor, measured from the
    /// first vertex, lies in `[pi, 2 pi)`.
    lower_half: Vec<bool>,
}

impl ConvexPolygon {
    /// `vertices` must be strictly convex and counterclockwise.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, AppError> {
        let n = vertices.len();
        if n < 3 {
            return Err(AppError::TooFew(3));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(AppError::NotFinite(i));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if orientation(a, b, c) != Orientation::Left {
                return Err(AppError::NotConvex((i + 1) % n));
            }
        }
        // A polygon can wind more than once while turning left at every vertex.
        let turned: f64 = (0..n)
            .map(|i| {
                let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                let (u, v) = ([b.x() - a.x(), b.y() - a.y()], [c.x() - b.x(), c.y() - b.y()]);
                (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1])
            })
            .sum();
        if (turned - TAU).abs() > 1e-6 {
            return Err(AppError::NotConvex(0));
        }
        let inv = 1.0 / n as f64;
        let anchor = Point2::xy(
            vertices.iter().map(|p| p.x()).sum::<f64>() * inv,
            vertices.iter().map(|p| p.y()).sum::<f64>() * inv,
        );
        let lower_half = vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| i != 0 && orientation(anchor, vertices[0], v) != Orientation::Left)
            .collect();
        Ok(ConvexPolygon {
            vertices,
            anchor,
            lower_half,
        })
    }

    /// `n` vertices on the circle of radius `0.4 * DATA_SCALE` centred in the
    /// data square, at jittered equally spaced angles.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, AppError> {
        let c = DATA_SCALE / 2.0;
        let r = 0.4 * DATA_SCALE;
        let vertices = (0..n)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5 * rng.random::<f64>()) / n as f64;
                Point2::xy(c + r * t.cos(), c + r * t.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn anchor(&self) -> Point2 {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Closed membership by fan search; also returns the orientation tests spent.
    pub fn locate(&self, q: &Point2) -> (Membership, u64) {
        let (a, v0) = (self.anchor, self.vertices[0]);
        let mut ops = 1;
        let q_lower = match orientation(a, v0, *q) {
            Orientation::Left => false,
            Orientation::Right => true,
            Orientation::Collinear => {
                let d = [v0.x() - a.x(), v0.y() - a.y()];
                (q.x() - a.x()) * d[0] + (q.y() - a.y()) * d[1] < 0.0
            }
        };
        // Largest i whose vertex angle does not exceed that of q.
        let (mut lo, mut hi) = (0, self.vertices.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let before = if self.lower_half[mid] != q_lower {
                !self.lower_half[mid]
            } else {
                ops += 1;
                orientation(a, self.vertices[mid], *q) != Orientation::Right
            };
            if before {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (u, w) = self.edge(lo);
        ops += 1;
        (Membership::from(orientation(u, w, *q) != Orientation::Right), ops)
    }

    /// Reference answer: `q` is on the inner side of every edge.
    pub fn scan(&self, q: &Point2) -> Membership {
        Membership::from((0..self.vertices.len()).all(|i| {
            let (u, w) = self.edge(i);
            orientation(u, w, *q) != Orientation::Right
        }))
    }
}

impl BackupOracle for ConvexPolygon {
    type Point = Point2;
    type Answer = Membership;

    fn answer_counted(&self, q: &Point2) -> (Membership, u64) {
        self.locate(q)
    }
}

/// Slack used when testing polygon vertices against a region.
const VERTEX_SLACK: f64 = 1e-9;

impl InterferenceOracle<ConvexRegion> for ConvexPolygon {
    type Answer = Membership;

    /// Mixed iff the region touches the polygon boundary; otherwise the
    /// answer at the region's vertex centroid.
    fn classify(&self, region: &ConvexRegion) -> Verdict<Membership> {
        if region.is_empty() {
            return Verdict::Empty;
        }
        let Some(rv) = region.vertices() else {
            return Verdict::Mixed;
        };
        if self.vertices.iter().any(|p| region.contains_with_slack(p, VERTEX_SLACK)) {
            return Verdict::Mixed;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in rv {
            for k in 0..2 {
                lo[k] = lo[k].min(p.0[k]);
                hi[k] = hi[k].max(p.0[k]);
            }
        }
        let pad = VERTEX_SLACK * (1.0 + hi[0].abs().max(hi[1].abs()).max(lo[0].abs()).max(lo[1].abs()));
        let k = rv.len();
        for i in 0..self.vertices.len() {
            let (u, w) = self.edge(i);
            if u.x().max(w.x()) < lo[0] - pad
                || u.x().min(w.x()) > hi[0] + pad
                || u.y().max(w.y()) < lo[1] - pad
                || u.y().min(w.y()) > hi[1] + pad
            {
                continue;
            }
            for j in 0..k {
                let (x, y) = (rv[j], rv[(j + 1) % k]);
                if segments_intersect(u, w, x, y, IntersectMode::Closed).unwrap_or(true) {
                    return Verdict::Mixed;
                }
            }
        }
        let inv = 1.0 / k as f64;
        let centroid = Point2::xy(
            rv.iter().map(|p| p.x()).sum::<f64>() * inv,
            rv.iter().map(|p| p.y()).sum::<f64>() * inv,
        );
        Verdict::Uniform(self.scan(&centroid))
    }
}
