use super::{orientation, signed_area, GeometryError, Orientation, Point2, Region};
use rand::Rng;

/// The closed set `{x : normal . x <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    normal: [f64; 2],
    offset: f64,
}

impl HalfPlane {
    pub fn new(normal: [f64; 2], offset: f64) -> Result<Self, GeometryError> {
        let ok = normal.iter().all(|c| c.is_finite())
            && offset.is_finite()
            && (normal[0] != 0.0 || normal[1] != 0.0);
        if !ok {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(HalfPlane { normal, offset })
    }

    /// Halfplane `normal . x <= normal . through`, i.e. bounded by the line
    /// through `through` orthogonal to `normal`.
    pub fn through(normal: [f64; 2], through: Point2) -> Result<Self, GeometryError> {
        let offset = normal[0] * through.x() + normal[1] * through.y();
        HalfPlane::new(normal, offset)
    }

    /// Halfplane to the left of (or on) the directed line `a -> b`.
    pub fn left_of(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        let dx = b.x() - a.x();
        let dy = b.y() - a.y();
        HalfPlane::new([dy, -dx], dy * a.x() - dx * a.y())
    }

    pub fn normal(&self) -> [f64; 2] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn project(&self, p: &Point2) -> f64 {
        self.normal[0] * p.x() + self.normal[1] * p.y()
    }

    #[inline]
    pub fn contains(&self, p: &Point2) -> bool {
        self.project(p) <= self.offset
    }

    /// The opposite closed halfplane. Negation is exact in IEEE arithmetic, so
    /// every point lies in `self` or in `self.flipped()`.
    pub fn flipped(&self) -> HalfPlane {
        HalfPlane {
            normal: [-self.normal[0], -self.normal[1]],
            offset: -self.offset,
        }
    }

    /// Magnitude used to scale tolerances for this constraint at `p`.
    fn scale_at(&self, p: &Point2) -> f64 {
        (self.normal[0] * p.x()).abs() + (self.normal[1] * p.y()).abs() + self.offset.abs()
    }

    /// Parametrisation `origin + t * direction` of the boundary line.
    pub fn boundary(&self) -> (Point2, [f64; 2]) {
        let n2 = self.normal[0] * self.normal[0] + self.normal[1] * self.normal[1];
        let origin = Point2::xy(
            self.normal[0] * self.offset / n2,
            self.normal[1] * self.offset / n2,
        );
        (origin, [-self.normal[1], self.normal[0]])
    }
}

/// Intersection of closed halfplanes, with a cached counterclockwise vertex
/// list when the region is bounded.
///
/// `polygon == None` marks a region whose boundedness was never established
/// (the wedges produced by a split); those still support membership tests but
/// cannot be triangulated. `Some(vec![])` is the empty region.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    constraints: Vec<HalfPlane>,
    polygon: Option<Vec<Point2>>,
}

impl ConvexRegion {
    /// Unbounded region given by constraints only.
    pub fn unbounded(constraints: Vec<HalfPlane>) -> Self {
        ConvexRegion {
            constraints,
            polygon: None,
        }
    }

    /// Axis-aligned rectangle `[lo.x, hi.x] x [lo.y, hi.y]`.
    pub fn rect(lo: Point2, hi: Point2) -> Self {
        let constraints = vec![
            HalfPlane { normal: [1.0, 0.0], offset: hi.x() },
            HalfPlane { normal: [-1.0, 0.0], offset: -lo.x() },
            HalfPlane { normal: [0.0, 1.0], offset: hi.y() },
            HalfPlane { normal: [0.0, -1.0], offset: -lo.y() },
        ];
        let polygon = if lo.x() > hi.x() || lo.y() > hi.y() {
            Vec::new()
        } else {
            dedup(vec![lo, Point2::xy(hi.x(), lo.y()), hi, Point2::xy(lo.x(), hi.y())])
        };
        ConvexRegion {
            constraints,
            polygon: Some(polygon),
        }
    }

    /// Region bounded by a counterclockwise convex polygon.
    pub fn from_polygon(vertices: &[Point2]) -> Result<Self, GeometryError> {
        let vertices = dedup(vertices.to_vec());
        if vertices.is_empty() {
            return Err(GeometryError::Empty);
        }
        let mut constraints = Vec::with_capacity(vertices.len());
        if vertices.len() >= 2 {
            for (i, a) in vertices.iter().enumerate() {
                let b = vertices[(i + 1) % vertices.len()];
                constraints.push(HalfPlane::left_of(*a, b)?);
            }
        }
        if vertices.len() <= 2 {
            // Segment or point: pin down the extent along the carrier line.
            let a = vertices[0];
            let b = *vertices.last().unwrap();
            if a == b {
                constraints.extend(ConvexRegion::rect(a, a).constraints);
            } else {
                let d = [b.x() - a.x(), b.y() - a.y()];
                constraints.push(HalfPlane::through(d, b)?);
                constraints.push(HalfPlane::through([-d[0], -d[1]], a)?);
            }
        }
        Ok(ConvexRegion {
            constraints,
            polygon: Some(vertices),
        })
    }

    pub fn triangle(a: Point2, b: Point2, c: Point2) -> Result<Self, GeometryError> {
        if orientation(a, b, c) == Orientation::Right {
            ConvexRegion::from_polygon(&[a, c, b])
        } else {
            ConvexRegion::from_polygon(&[a, b, c])
        }
    }

    pub fn constraints(&self) -> &[HalfPlane] {
        &self.constraints
    }

    /// Cached counterclockwise vertices, `None` if the region is not known to
    /// be bounded.
    pub fn vertices(&self) -> Option<&[Point2]> {
        self.polygon.as_deref()
    }

    pub fn is_bounded(&self) -> bool {
        self.polygon.is_some()
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.polygon, Some(v) if v.is_empty())
    }

    /// Closed membership: the point satisfies every constraint.
    pub fn contains(&self, p: &Point2) -> bool {
        self.constraints.iter().all(|h| h.contains(p))
    }

    /// Membership with a relative slack on every constraint.
    pub fn contains_with_slack(&self, p: &Point2, rel: f64) -> bool {
        self.constraints
            .iter()
            .all(|h| h.project(p) - h.offset <= rel * (h.scale_at(p) + 1.0))
    }

    pub fn area(&self) -> f64 {
        self.polygon.as_deref().map(signed_area).unwrap_or(f64::INFINITY)
    }

    /// `self` intersected with `h`; the vertex cache is clipped with one
    /// Sutherland-Hodgman pass.
    pub fn clip(&self, h: &HalfPlane) -> ConvexRegion {
        let mut constraints = self.constraints.clone();
        constraints.push(*h);
        let polygon = self.polygon.as_ref().map(|poly| clip_polygon(poly, h));
        ConvexRegion {
            constraints,
            polygon,
        }
    }

    /// Fan triangulation from the lexicographically smallest vertex.
    pub fn triangulate(&self) -> Result<Vec<[Point2; 3]>, GeometryError> {
        let poly = self.polygon.as_ref().ok_or(GeometryError::Unbounded)?;
        if poly.is_empty() {
            return Err(GeometryError::Empty);
        }
        let start = (0..poly.len())
            .min_by(|&i, &j| poly[i].lex_cmp(&poly[j]))
            .unwrap();
        let n = poly.len();
        let at = |k: usize| poly[(start + k) % n];
        Ok(match n {
            1 => vec![[at(0); 3]],
            2 => vec![[at(0), at(1), at(1)]],
            _ => (1..n - 1).map(|k| [at(0), at(k), at(k + 1)]).collect(),
        })
    }

    /// Does the boundary line of `line` meet the interior of this region?
    pub fn interior_meets_line(&self, line: &HalfPlane) -> bool {
        let (origin, dir) = line.boundary();
        // Open parameter interval on which every constraint holds strictly.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for h in &self.constraints {
            let slope = h.normal[0] * dir[0] + h.normal[1] * dir[1];
            let gap = h.offset - h.project(&origin);
            let tol = 1e-12 * (h.scale_at(&origin) + 1.0);
            let slope_tol = 1e-12 * (h.normal[0].abs() + h.normal[1].abs()) * (dir[0].abs() + dir[1].abs());
            if slope.abs() <= slope_tol {
                if gap <= tol {
                    return false;
                }
                continue;
            }
            // gap - slope * t > tol
            let t = (gap - tol) / slope;
            if slope > 0.0 {
                hi = hi.min(t);
            } else {
                lo = lo.max(t);
            }
            if lo >= hi {
                return false;
            }
        }
        lo < hi
    }

    /// Largest violation of any constraint by any cached vertex, relative to
    /// the magnitude of the terms involved.
    pub fn max_vertex_violation(&self) -> f64 {
        let Some(poly) = &self.polygon else { return 0.0 };
        let mut worst: f64 = 0.0;
        for v in poly {
            for h in &self.constraints {
                let excess = h.project(v) - h.offset;
                worst = worst.max(excess / (h.scale_at(v) + 1.0));
            }
        }
        worst
    }
}

fn clip_polygon(poly: &[Point2], h: &HalfPlane) -> Vec<Point2> {
    if poly.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let next = poly[(i + 1) % n];
        let cur_in = h.contains(&cur);
        let next_in = h.contains(&next);
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let fc = h.project(&cur) - h.offset;
            let fn_ = h.project(&next) - h.offset;
            let t = (fc / (fc - fn_)).clamp(0.0, 1.0);
            out.push(Point2::xy(
                cur.x() + t * (next.x() - cur.x()),
                cur.y() + t * (next.y() - cur.y()),
            ));
        }
    }
    dedup(out)
}

fn dedup(mut v: Vec<Point2>) -> Vec<Point2> {
    v.dedup();
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    v
}

impl Region for ConvexRegion {
    type Point = Point2;

    fn working(lo: f64, hi: f64) -> Self {
        ConvexRegion::rect(Point2::xy(lo, lo), Point2::xy(hi, hi))
    }

    fn contains(&self, p: &Point2) -> bool {
        ConvexRegion::contains(self, p)
    }

    fn intersect(&self, other: &Self) -> Self {
        other.constraints.iter().fold(self.clone(), |r, h| r.clip(h))
    }

    fn is_empty(&self) -> bool {
        ConvexRegion::is_empty(self)
    }

    fn pieces(&self) -> Vec<Self> {
        match (self.vertices(), self.triangulate()) {
            (Some(v), Ok(tris)) if v.len() >= 3 => tris
                .into_iter()
                .map(|[a, b, c]| ConvexRegion::triangle(a, b, c).unwrap_or_else(|_| self.clone()))
                .collect(),
            _ => vec![self.clone()],
        }
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point2> {
        let tris = self.triangulate().ok()?;
        let areas: Vec<f64> = tris
            .iter()
            .map(|t| signed_area(&[t[0], t[1], t[2]]).abs())
            .collect();
        let total: f64 = areas.iter().sum();
        let tri = if total > 0.0 {
            let mut pick = rng.random::<f64>() * total;
            let mut chosen = tris.len() - 1;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    chosen = i;
                    break;
                }
                pick -= a;
            }
            tris[chosen]
        } else {
            tris[rng.random_range(0..tris.len())]
        };
        let (mut s, mut t) = (rng.random::<f64>(), rng.random::<f64>());
        if s + t > 1.0 {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        let [a, b, c] = tri;
        Some(Point2::xy(
            a.x() + s * (b.x() - a.x()) + t * (c.x() - a.x()),
            a.y() + s * (b.y() - a.y()) + t * (c.y() - a.y()),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::xy(x, y)
    }

    fn unit_square() -> ConvexRegion {
        ConvexRegion::rect(p(0., 0.), p(1., 1.))
    }

    fn x_at_most(v: f64) -> HalfPlane {
        HalfPlane::new([1.0, 0.0], v).unwrap()
    }

    #[test]
    fn zero_normal_rejected() {
        assert_eq!(HalfPlane::new([0.0, 0.0], 1.0), Err(GeometryError::ZeroNormal));
    }

    #[test]
    fn clip_left_half() {
        let r = unit_square().clip(&x_at_most(0.5));
        assert_eq!(
            r.vertices().unwrap(),
            &[p(0., 0.), p(0.5, 0.), p(0.5, 1.), p(0., 1.)]
        );
        assert!(!r.is_empty());
        assert!((r.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clip_to_nothing() {
        let r = unit_square().clip(&x_at_most(-1.0));
        assert!(r.is_empty());
        assert!(!r.contains(&p(0.5, 0.5)));
    }

    #[test]
    fn redundant_clip_keeps_square() {
        let r = unit_square().clip(&x_at_most(2.0));
        assert_eq!(r.vertices(), unit_square().vertices());
    }

    #[test]
    fn closed_containment() {
        let sq = unit_square();
        assert!(sq.contains(&p(0.5, 0.5)));
        assert!(sq.contains(&p(1.0, 1.0)));
        assert!(!sq.contains(&p(1.0000001, 0.0)));
    }

    #[test]
    fn triangulate_triangle_and_square() {
        let t = ConvexRegion::triangle(p(0., 0.), p(1., 0.), p(0., 1.)).unwrap();
        assert_eq!(t.triangulate().unwrap().len(), 1);
        let tris = unit_square().triangulate().unwrap();
        assert_eq!(tris.len(), 2);
        assert!(tris.iter().all(|t| t[0] == p(0., 0.)));
        // shared diagonal (0,0)-(1,1)
        assert_eq!(tris[0][2], p(1., 1.));
        assert_eq!(tris[1][1], p(1., 1.));
    }

    #[test]
    fn triangulate_hexagon_area() {
        let hex: Vec<Point2> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                p(a.cos(), a.sin())
            })
            .collect();
        let r = ConvexRegion::from_polygon(&hex).unwrap();
        let tris = r.triangulate().unwrap();
        assert_eq!(tris.len(), 4);
        let total: f64 = tris.iter().map(|t| signed_area(t).abs()).sum();
        let exact = 3.0 * 3f64.sqrt() / 2.0;
        assert!((total - exact).abs() < 1e-9);
    }

    #[test]
    fn unbounded_cannot_triangulate() {
        let r = ConvexRegion::unbounded(vec![x_at_most(0.0)]);
        assert_eq!(r.triangulate(), Err(GeometryError::Unbounded));
        assert!(r.contains(&p(-5.0, 1e9)));
    }

    #[test]
    fn line_through_interior() {
        let sq = unit_square();
        let horizontal = HalfPlane::new([0.0, 1.0], 0.5).unwrap();
        assert!(sq.interior_meets_line(&horizontal));
        let edge = HalfPlane::new([0.0, 1.0], 1.0).unwrap();
        assert!(!sq.interior_meets_line(&edge));
        let outside = HalfPlane::new([1.0, 1.0], 3.0).unwrap();
        assert!(!sq.interior_meets_line(&outside));
    }

    fn random_region(rng: &mut ChaCha8Rng) -> ConvexRegion {
        let mut r = ConvexRegion::rect(p(-1., -1.), p(1., 1.));
        for _ in 0..rng.random_range(0..5) {
            r = r.clip(&random_halfplane(rng));
        }
        r
    }

    fn random_halfplane(rng: &mut ChaCha8Rng) -> HalfPlane {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        HalfPlane::new([a.cos(), a.sin()], rng.random_range(-0.8..0.8)).unwrap()
    }

    #[test]
    fn clip_then_contains_matches_conjunction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let r = random_region(&mut rng);
            let h = random_halfplane(&mut rng);
            let q = p(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            assert_eq!(r.clip(&h).contains(&q), r.contains(&q) && h.contains(&q));
        }
    }

    #[test]
    fn cached_vertices_satisfy_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let r = random_region(&mut rng).clip(&random_halfplane(&mut rng));
            assert!(r.max_vertex_violation() <= 1e-9);
        }
    }

    #[test]
    fn triangulation_conserves_area_and_tiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let r = random_region(&mut rng);
            if r.is_empty() || r.vertices().unwrap().len() < 3 {
                continue;
            }
            let tris = r.triangulate().unwrap();
            let total: f64 = tris.iter().map(|t| signed_area(t).abs()).sum();
            assert!((total - r.area()).abs() <= 1e-9 * r.area().max(1e-300));
            for _ in 0..50 {
                let q = r.sample_uniform(&mut rng).unwrap();
                let strictly_inside = tris
                    .iter()
                    .filter(|t| {
                        (0..3).all(|k| orientation(t[k], t[(k + 1) % 3], q) == Orientation::Left)
                    })
                    .count();
                let touching = tris
                    .iter()
                    .filter(|t| {
                        (0..3).all(|k| orientation(t[k], t[(k + 1) % 3], q) != Orientation::Right)
                    })
                    .count();
                assert!(strictly_inside <= 1);
                assert!(touching >= 1);
            }
        }
    }

    proptest! {
        #[test]
        fn flipped_halfplanes_cover(nx in -5.0f64..5.0, ny in -5.0f64..5.0, off in -3.0f64..3.0,
                                    x in -10.0f64..10.0, y in -10.0f64..10.0) {
            prop_assume!(nx != 0.0 || ny != 0.0);
            let h = HalfPlane::new([nx, ny], off).unwrap();
            let q = p(x, y);
            prop_assert!(h.contains(&q) || h.flipped().contains(&q));
        }
    }
}
