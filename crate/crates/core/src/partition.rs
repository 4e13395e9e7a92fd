//! Split rules: one level of a simplicial partition over a point sample.
//!
//! [`TwoLineRule`] cuts the plane with two crossing lines into four wedges,
//! each holding at most `ceil(m/4)` of the sample; a line can cross the
//! interiors of at most three wedges. [`KdRule`] is the comparison-model
//! counterpart: an axis-cycling median halving of boxes.

use crate::geometry::{BoxN, ConvexRegion, HalfPlane, Point, Point2, Region};
use std::f64::consts::FRAC_PI_2;

/// Decision-tree model a rule's branch tests live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Linear inequalities in the plane.
    Linear2d,
    /// Single-coordinate comparisons.
    Comparison,
}

/// Ordered child regions plus the sample assignment they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult<R> {
    pub children: Vec<R>,
    /// `assignment[i]` holds the indices of the sample points whose first
    /// containing child is `i`.
    pub assignment: Vec<Vec<usize>>,
}

impl<R> SplitResult<R> {
    pub fn sizes(&self) -> Vec<usize> {
        self.assignment.iter().map(Vec::len).collect()
    }

    pub fn max_size(&self) -> usize {
        self.assignment.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub trait SplitRule: Send + Sync {
    type Region: Region;

    fn arity(&self) -> usize;

    fn model(&self) -> Model;

    fn split(
        &self,
        sample: &[<Self::Region as Region>::Point],
        depth: usize,
    ) -> SplitResult<Self::Region>;
}

/// Index of the first region containing `p`.
pub fn first_containing<R: Region>(children: &[R], p: &R::Point) -> Option<usize> {
    children.iter().position(|c| c.contains(p))
}

fn assign<R: Region>(children: &[R], sample: &[R::Point]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); children.len()];
    for (i, p) in sample.iter().enumerate() {
        // Children cover space, so the fallback to the last child only
        // triggers on non-finite input.
        let c = first_containing(children, p).unwrap_or(children.len() - 1);
        out[c].push(i);
    }
    out
}

/// Two-line partition with its generating lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLineSplit {
    /// Positive sides of the first and second line. The four children are
    /// `l1 & l2`, `l1 & !l2`, `!l1 & !l2`, `!l1 & l2`, counterclockwise.
    pub lines: [HalfPlane; 2],
    pub result: SplitResult<ConvexRegion>,
}

fn wedges(l1: HalfPlane, l2: HalfPlane) -> Vec<ConvexRegion> {
    vec![
        ConvexRegion::unbounded(vec![l1, l2]),
        ConvexRegion::unbounded(vec![l1, l2.flipped()]),
        ConvexRegion::unbounded(vec![l1.flipped(), l2.flipped()]),
        ConvexRegion::unbounded(vec![l1.flipped(), l2]),
    ]
}

fn build_split(l1: HalfPlane, l2: HalfPlane, sample: &[Point2]) -> TwoLineSplit {
    let children = wedges(l1, l2);
    let assignment = assign(&children, sample);
    TwoLineSplit {
        lines: [l1, l2],
        result: SplitResult {
            children,
            assignment,
        },
    }
}

fn unit_normal(theta: f64) -> [f64; 2] {
    [-theta.sin(), theta.cos()]
}

/// `k`-th smallest (0-based) of `values`, reordering the scratch buffer.
fn select(values: &mut [f64], k: usize) -> f64 {
    *values.select_nth_unstable_by(k, f64::total_cmp).1
}

/// Offsets `c` for the second line at angle `theta` that keep both halves of
/// the left and right sets within the cell capacity.
struct Window {
    /// Midpoint of the admissible offset interval for the left set.
    left_mid: Option<f64>,
    right_mid: Option<f64>,
    /// Bounds of the joint admissible interval (may be empty).
    lower: f64,
    upper: f64,
}

struct HamSandwich<'a> {
    left: Vec<Point2>,
    right: Vec<Point2>,
    cap: usize,
    sample: &'a [Point2],
    scratch: Vec<f64>,
}

impl HamSandwich<'_> {
    fn window(&mut self, theta: f64) -> Window {
        let n = unit_normal(theta);
        let proj = |p: &Point2| n[0] * p.x() + n[1] * p.y();
        let cap = self.cap;
        let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);

        // Left points on the line go to the positive side:
        // need #{proj >= c} <= cap and #{proj < c} <= cap.
        let a = self.left.len();
        let left_mid = if a > cap {
            self.scratch.clear();
            self.scratch.extend(self.left.iter().map(proj));
            let lo = select(&mut self.scratch, a - cap - 1);
            let hi = select(&mut self.scratch, cap);
            lower = lower.max(lo);
            upper = upper.min(hi);
            Some(0.5 * (lo + hi))
        } else {
            None
        };
        // Right points on the line go to the negative side:
        // need #{proj > c} <= cap and #{proj <= c} <= cap.
        let b = self.right.len();
        let right_mid = if b > cap {
            self.scratch.clear();
            self.scratch.extend(self.right.iter().map(proj));
            let lo = select(&mut self.scratch, b - cap - 1);
            let hi = select(&mut self.scratch, cap);
            lower = lower.max(lo);
            upper = upper.min(hi);
            Some(0.5 * (lo + hi))
        } else {
            None
        };
        Window {
            left_mid,
            right_mid,
            lower,
            upper,
        }
    }

    fn gap(&mut self, theta: f64) -> f64 {
        let w = self.window(theta);
        match (w.left_mid, w.right_mid) {
            (Some(l), Some(r)) => l - r,
            _ => 0.0,
        }
    }

    /// Best split found among offsets at angle `theta`.
    fn try_angle(&mut self, l1: HalfPlane, theta: f64, pivot: Point2) -> TwoLineSplit {
        let w = self.window(theta);
        let n = unit_normal(theta);
        let mut offsets = Vec::with_capacity(4);
        if w.lower.is_finite() && w.upper.is_finite() {
            offsets.push(0.5 * (w.lower + w.upper));
            offsets.push(w.lower);
            offsets.push(w.upper);
        } else if w.lower.is_finite() {
            offsets.push(w.lower);
        } else if w.upper.is_finite() {
            offsets.push(w.upper);
        } else {
            offsets.push(n[0] * pivot.x() + n[1] * pivot.y());
        }
        let mut best: Option<TwoLineSplit> = None;
        for c in offsets {
            // positive side: n . p >= c
            let Ok(l2) = HalfPlane::new([-n[0], -n[1]], -c) else { continue };
            let cand = build_split(l1, l2, self.sample);
            if best
                .as_ref()
                .is_none_or(|b| cand.result.max_size() < b.result.max_size())
            {
                let done = cand.result.max_size() <= self.cap;
                best = Some(cand);
                if done {
                    break;
                }
            }
        }
        best.expect("at least one offset candidate")
    }
}

/// Partition `sample` with two lines into four wedges of at most
/// `ceil(m/4)` points each.
///
/// The first line is the vertical through the lower-median x-coordinate,
/// tilted slightly when several points share that coordinate. The second
/// line simultaneously bisects the points on either side; it is located by
/// bisection on its angle and then checked by recounting. Inputs with heavy
/// duplication may not admit the bound; the best split found is returned.
pub fn two_line_split(sample: &[Point2], _depth: usize) -> TwoLineSplit {
    let m = sample.len();
    let first = sample.first().copied().unwrap_or(Point2::xy(0.0, 0.0));
    if sample.iter().all(|p| *p == first) {
        return build_split(
            HalfPlane::through([1.0, 0.0], first).unwrap(),
            HalfPlane::through([0.0, -1.0], first).unwrap(),
            sample,
        );
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| sample[i].lex_cmp(&sample[j]).then(i.cmp(&j)));
    let half = m.div_ceil(2);
    let pivot = sample[order[half - 1]];
    let next_x = order.get(half).map(|&i| sample[i].x());

    let l1 = if next_x.is_some_and(|x| x > pivot.x()) {
        HalfPlane::through([1.0, 0.0], pivot).unwrap()
    } else {
        // Tilt so that the halfplane orders points lexicographically.
        let xs: Vec<f64> = order.iter().map(|&i| sample[i].x()).collect();
        let gap = xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        let (ymin, ymax) = sample
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.y()), hi.max(p.y()))
            });
        let yrange = ymax - ymin;
        if !gap.is_finite() {
            HalfPlane::through([0.0, 1.0], pivot).unwrap()
        } else if yrange == 0.0 {
            HalfPlane::through([1.0, 0.0], pivot).unwrap()
        } else {
            HalfPlane::through([1.0, gap / (4.0 * yrange)], pivot).unwrap()
        }
    };

    let (left, right): (Vec<Point2>, Vec<Point2>) = sample.iter().partition(|p| l1.contains(p));
    let cap = m.div_ceil(4);
    let mut hs = HamSandwich {
        left,
        right,
        cap,
        sample,
        scratch: Vec::with_capacity(m),
    };

    let mut candidates = Vec::new();
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let g_lo = hs.gap(lo);
    let g_hi = hs.gap(hi);
    if g_lo == 0.0 {
        candidates.push(lo);
    } else if g_hi == 0.0 || g_lo.signum() == g_hi.signum() {
        candidates.push(0.0);
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = hs.gap(mid);
            if g == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if g.signum() == g_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        candidates.extend([0.5 * (lo + hi), lo, hi]);
    }

    let mut best: Option<TwoLineSplit> = None;
    let consider = |hs: &mut HamSandwich, theta: f64, best: &mut Option<TwoLineSplit>| {
        let cand = hs.try_angle(l1, theta, pivot);
        if best
            .as_ref()
            .is_none_or(|b| cand.result.max_size() < b.result.max_size())
        {
            *best = Some(cand);
        }
        best.as_ref().unwrap().result.max_size() <= cap
    };
    for theta in candidates {
        if consider(&mut hs, theta, &mut best) {
            return best.unwrap();
        }
    }
    // Degenerate input: scan a fixed fan of directions.
    for k in 0..256 {
        let theta = -FRAC_PI_2 + std::f64::consts::PI * (k as f64 + 0.5) / 256.0;
        if consider(&mut hs, theta, &mut best) {
            break;
        }
    }
    best.unwrap()
}

/// Number of children whose interior is crossed by the boundary line of `line`.
pub fn crossing_count(result: &SplitResult<ConvexRegion>, line: &HalfPlane) -> usize {
    result
        .children
        .iter()
        .filter(|c| c.interior_meets_line(line))
        .count()
}

/// Lower-median halving on axis `depth mod D`.
pub fn kd_split<const D: usize>(sample: &[Point<D>], depth: usize) -> SplitResult<BoxN<D>> {
    let axis = depth % D;
    let threshold = if sample.is_empty() {
        0.0
    } else {
        let mut values: Vec<f64> = sample.iter().map(|p| p.0[axis]).collect();
        select(&mut values, sample.len().div_ceil(2) - 1)
    };
    let children = vec![BoxN::below(axis, threshold), BoxN::above(axis, threshold)];
    let assignment = assign(&children, sample);
    SplitResult {
        children,
        assignment,
    }
}

/// Four-way two-line partition of the plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoLineRule;

impl SplitRule for TwoLineRule {
    type Region = ConvexRegion;

    fn arity(&self) -> usize {
        4
    }

    fn model(&self) -> Model {
        Model::Linear2d
    }

    fn split(&self, sample: &[Point2], depth: usize) -> SplitResult<ConvexRegion> {
        two_line_split(sample, depth).result
    }
}

/// Binary k-d halving in `D` dimensions.
#[derive(Debug, Clone, Copy, Default)]
pub struct KdRule<const D: usize>;

impl<const D: usize> SplitRule for KdRule<D> {
    type Region = BoxN<D>;

    fn arity(&self) -> usize {
        2
    }

    fn model(&self) -> Model {
        Model::Comparison
    }

    fn split(&self, sample: &[Point<D>], depth: usize) -> SplitResult<BoxN<D>> {
        kd_split(sample, depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::xy(x, y)
    }

    fn random_points(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point2> {
        (0..m)
            .map(|_| p(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)))
            .collect()
    }

    /// Cell index from the signs of the two lines alone.
    fn recount(split: &TwoLineSplit, sample: &[Point2]) -> [usize; 4] {
        let [l1, l2] = split.lines;
        let mut counts = [0; 4];
        for q in sample {
            let s1 = l1.contains(q);
            let s2 = l2.contains(q);
            let s2_neg = l2.flipped().contains(q);
            let cell = if s1 && s2 {
                0
            } else if s1 {
                1
            } else if s2_neg {
                2
            } else {
                3
            };
            counts[cell] += 1;
        }
        counts
    }

    #[test]
    fn symmetric_eight_points() {
        let pts = [
            p(1., 2.),
            p(-1., 2.),
            p(1., -2.),
            p(-1., -2.),
            p(2., 1.),
            p(-2., 1.),
            p(2., -1.),
            p(-2., -1.),
        ];
        let s = two_line_split(&pts, 0);
        assert_eq!(s.result.sizes(), vec![2, 2, 2, 2]);
    }

    #[test]
    fn single_point() {
        let s = two_line_split(&[p(3., 3.)], 0);
        assert_eq!(s.result.sizes(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn identical_points_degenerate() {
        let pts = vec![p(1., -4.); 9];
        let s = two_line_split(&pts, 2);
        assert_eq!(s.result.sizes(), vec![9, 0, 0, 0]);
    }

    #[test]
    fn sixty_four_random_points_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let pts = random_points(&mut rng, 64);
        let s = two_line_split(&pts, 0);
        let counts = recount(&s, &pts);
        assert!(counts.iter().all(|&c| c <= 16), "{counts:?}");
        assert_eq!(counts.to_vec(), s.result.sizes());
    }

    #[test]
    fn shared_x_coordinates_are_tilted() {
        // Many points share each x-coordinate, including the median one.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for m in [16usize, 33, 100, 257] {
            let pts: Vec<Point2> = (0..m)
                .map(|_| p(rng.random_range(0..6) as f64, rng.random_range(-50.0..50.0)))
                .collect();
            let s = two_line_split(&pts, 0);
            assert!(s.result.max_size() <= m.div_ceil(4), "m={m} {:?}", s.result.sizes());
        }
    }

    #[test]
    fn size_bound_over_many_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &m in &[16usize, 64, 256, 1024] {
            for _ in 0..100 {
                let pts = random_points(&mut rng, m);
                let s = two_line_split(&pts, 0);
                assert!(s.result.max_size() <= m.div_ceil(4), "m={m} {:?}", s.result.sizes());
                assert_eq!(s.result.sizes().iter().sum::<usize>(), m);
            }
        }
    }

    #[test]
    fn odd_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in 1..40 {
            let pts = random_points(&mut rng, m);
            let s = two_line_split(&pts, 0);
            assert!(s.result.max_size() <= m.div_ceil(4), "m={m} {:?}", s.result.sizes());
        }
    }

    #[test]
    fn wedges_cover_the_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = random_points(&mut rng, 100);
        let s = two_line_split(&pts, 0);
        for _ in 0..10_000 {
            let q = p(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
            assert!(first_containing(&s.result.children, &q).is_some());
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 200);
        assert_eq!(two_line_split(&pts, 1), two_line_split(&pts, 1));
    }

    fn random_line(rng: &mut ChaCha8Rng) -> HalfPlane {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        HalfPlane::new([a.cos(), a.sin()], rng.random_range(-150.0..150.0)).unwrap()
    }

    /// Children whose interior contains one of 1000 points sampled along `line`.
    fn sampled_crossings(result: &SplitResult<ConvexRegion>, line: &HalfPlane) -> usize {
        let (origin, dir) = line.boundary();
        let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        let hit = |c: &ConvexRegion| {
            (0..1000).any(|k| {
                let t = (k as f64 / 999.0 - 0.5) * 2e4 / norm;
                let q = p(origin.x() + t * dir[0], origin.y() + t * dir[1]);
                c.constraints().iter().all(|h| h.project(&q) < h.offset())
            })
        };
        result.children.iter().filter(|c| hit(c)).count()
    }

    #[test]
    fn crossing_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let m = rng.random_range(8..300);
            let s = two_line_split(&random_points(&mut rng, m), 0);
            for _ in 0..100 {
                let line = random_line(&mut rng);
                let c = crossing_count(&s.result, &line);
                assert!(c <= 3);
                assert!(sampled_crossings(&s.result, &line) <= c);
            }
        }
    }

    #[test]
    fn first_line_crosses_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let s = two_line_split(&random_points(&mut rng, 50), 0);
        assert_eq!(crossing_count(&s.result, &s.lines[0]), 0);
        assert_eq!(crossing_count(&s.result, &s.lines[1]), 0);
    }

    #[test]
    fn parallel_line_crosses_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = two_line_split(&random_points(&mut rng, 50), 0);
        let l1 = s.lines[0];
        for shift in [-30.0, 30.0] {
            let parallel = HalfPlane::new(l1.normal(), l1.offset() + shift).unwrap();
            let c = crossing_count(&s.result, &parallel);
            assert_eq!(c, 2);
            assert_eq!(sampled_crossings(&s.result, &parallel), c);
        }
    }

    #[test]
    fn kd_lower_median() {
        let pts: Vec<Point2> = [1., 2., 3., 4.].iter().map(|&x| p(x, 0.)).collect();
        let s = kd_split(&pts, 0);
        assert_eq!(s.children[0], BoxN::below(0, 2.0));
        assert_eq!(s.sizes(), vec![2, 2]);
    }

    #[test]
    fn kd_identical_points() {
        let pts = vec![Point([1.0, 2.0, 3.0, 4.0]); 7];
        for depth in 0..5 {
            assert_eq!(kd_split(&pts, depth).sizes(), vec![7, 0]);
        }
    }

    #[test]
    fn kd_four_dimensional_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let pts: Vec<Point<4>> = (0..100)
            .map(|_| Point([(); 4].map(|_| rng.random_range(0.0..1.0))))
            .collect();
        let s = kd_split(&pts, 3);
        let threshold = s.children[0].hi[3];
        assert_eq!(s.children[1].lo[3], threshold);
        let below = pts.iter().filter(|q| q.0[3] <= threshold).count();
        assert_eq!(s.sizes(), vec![below, 100 - below]);
        assert!(below <= 50 && 100 - below <= 50);
    }

    #[test]
    fn kd_axis_parallel_crossings() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let pts: Vec<Point<4>> = (0..64)
            .map(|_| Point([(); 4].map(|_| rng.random_range(0.0..1.0))))
            .collect();
        let world = BoxN::<4>::working(-1.0, 2.0);
        for depth in 0..4 {
            let s = kd_split(&pts, depth);
            let axis = depth % 4;
            for _ in 0..100 {
                let v = rng.random_range(-1.0..2.0);
                let hits = s
                    .children
                    .iter()
                    .filter(|c| world.intersect(c).interior_meets_hyperplane(axis, v))
                    .count();
                assert!(hits <= 1);
            }
        }
    }
}
