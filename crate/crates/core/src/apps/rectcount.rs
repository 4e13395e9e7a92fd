use super::rangetree::RangeTree;
use super::{AppError, DATA_SCALE};
use crate::geometry::{Box4, Point2, Point4};
use crate::tree::{BackupOracle, InterferenceOracle, Verdict};
use rand::Rng;

/// Orthogonal range counting. A query `(q1, q2, q3, q4)` is the closed
/// rectangle `[q1, q2] x [q3, q4]`; inverted intervals are empty.
#[derive(Debug, Clone)]
pub struct RectCount {
    points: Vec<Point2>,
    index: RangeTree,
}

impl RectCount {
    pub fn new(points: Vec<Point2>) -> Result<Self, AppError> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(AppError::NotFinite(i));
        }
        let index = RangeTree::new(&points);
        Ok(RectCount { points, index })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, AppError> {
        let points = (0..n)
            .map(|_| Point2::xy(rng.random::<f64>() * DATA_SCALE, rng.random::<f64>() * DATA_SCALE))
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn count(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> u64 {
        self.index.count(x0, x1, y0, y1).0
    }

    pub fn scan(&self, q: &Point4) -> u64 {
        let [x0, x1, y0, y1] = q.0;
        self.points
            .iter()
            .filter(|p| x0 <= p.x() && p.x() <= x1 && y0 <= p.y() && p.y() <= y1)
            .count() as u64
    }
}

impl BackupOracle for RectCount {
    type Point = Point4;
    type Answer = u64;

    fn answer_counted(&self, q: &Point4) -> (u64, u64) {
        let [x0, x1, y0, y1] = q.0;
        self.index.count(x0, x1, y0, y1)
    }
}

impl InterferenceOracle<Box4> for RectCount {
    type Answer = u64;

    /// Every rectangle of the box contains the inner rectangle
    /// `[hi1, lo2] x [hi3, lo4]` and lies inside the outer one
    /// `[lo1, hi2] x [lo3, hi4]`, so equal counts certify the box.
    fn classify(&self, b: &Box4) -> Verdict<u64> {
        if b.is_empty() {
            return Verdict::Empty;
        }
        let (lo, hi) = (b.lo, b.hi);
        if lo[0] > hi[1] || lo[2] > hi[3] {
            return Verdict::Uniform(0);
        }
        let outer = self.count(lo[0], hi[1], lo[2], hi[3]);
        if hi[0] > lo[1] || hi[2] > lo[3] {
            return if outer == 0 { Verdict::Uniform(0) } else { Verdict::Mixed };
        }
        let inner = self.count(hi[0], lo[1], hi[2], lo[3]);
        if inner == outer {
            Verdict::Uniform(outer)
        } else {
            Verdict::Mixed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_point() -> RectCount {
        RectCount::new(vec![Point2::xy(5., 5.)]).unwrap()
    }

    fn bx(r: [[f64; 2]; 4]) -> Box4 {
        Box4::new(r.map(|a| a[0]), r.map(|a| a[1])).unwrap()
    }

    #[test]
    fn backup_examples() {
        let r = one_point();
        assert_eq!(r.answer(&Point([0., 10., 0., 10.])), 1);
        assert_eq!(r.answer(&Point([6., 4., 0., 10.])), 0);
        assert_eq!(r.answer(&Point([5., 5., 5., 5.])), 1);
    }

    #[test]
    fn interference_examples() {
        let r = one_point();
        assert_eq!(r.classify(&bx([[0., 1.], [9., 10.], [0., 1.], [9., 10.]])), Verdict::Uniform(1));
        assert_eq!(r.classify(&bx([[0., 1.], [4., 6.], [0., 1.], [9., 10.]])), Verdict::Mixed);
        assert_eq!(r.classify(&bx([[8., 9.], [1., 2.], [0., 1.], [9., 10.]])), Verdict::Uniform(0));
        // Partly inverted, nothing in the outer rectangle.
        assert_eq!(r.classify(&bx([[0., 3.], [2., 4.], [0., 1.], [9., 10.]])), Verdict::Uniform(0));
        assert_eq!(r.classify(&Box4::everything()), Verdict::Mixed);
        let empty = Box4::working(0.0, 1.0).intersect(&Box4::below(0, -1.0));
        assert_eq!(r.classify(&empty), Verdict::Empty);
    }

    #[test]
    fn backup_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let r = RectCount::random(5000, &mut rng).unwrap();
        for _ in 0..10_000 {
            let q = Point([(); 4].map(|_| rng.random_range(-50.0..1050.0)));
            assert_eq!(r.answer(&q), r.scan(&q));
        }
    }

    #[test]
    fn counts_are_monotone_under_inclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let r = RectCount::random(2000, &mut rng).unwrap();
        for _ in 0..10_000 {
            let mut outer = [0.0; 4];
            for k in [0, 2] {
                let a: f64 = rng.random_range(0.0..1000.0);
                let b = rng.random_range(0.0..1000.0);
                outer[k] = a.min(b);
                outer[k + 1] = a.max(b);
            }
            let mut inner = outer;
            for k in [0, 2] {
                let a: f64 = rng.random_range(outer[k]..=outer[k + 1]);
                let b = rng.random_range(outer[k]..=outer[k + 1]);
                inner[k] = a.min(b);
                inner[k + 1] = a.max(b);
            }
            assert!(r.answer(&Point(inner)) <= r.answer(&Point(outer)));
        }
    }

    #[test]
    fn interference_is_sound_on_random_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let r = RectCount::random(500, &mut rng).unwrap();
        let mut uniform = 0;
        for _ in 0..1000 {
            let mut lo = [0.0; 4];
            let mut hi = [0.0; 4];
            for k in 0..4 {
                let c = rng.random_range(0.0..1000.0);
                let w = rng.random_range(0.0..30.0);
                lo[k] = c;
                hi[k] = c + w;
            }
            let b = Box4::new(lo, hi).unwrap();
            if let Verdict::Uniform(a) = r.classify(&b) {
                uniform += 1;
                for _ in 0..1000 {
                    assert_eq!(r.scan(&b.sample_uniform(&mut rng).unwrap()), a);
                }
            }
        }
        assert!(uniform > 300);
    }
}
