use crate::geometry::Point2;

/// Static 2-d range counting tree.
///
/// Points are sorted by x. Level `l` stores, for every aligned block of
/// `2^l` consecutive points, their y-coordinates in sorted order. A query
/// decomposes its x-range into `O(log n)` blocks and binary-searches each.
#[derive(Debug, Clone)]
pub struct RangeTree {
    xs: Vec<f64>,
    levels: Vec<Vec<f64>>,
}

impl RangeTree {
    pub fn new(points: &[Point2]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.lex_cmp(b));
        let xs: Vec<f64> = pts.iter().map(|p| p.x()).collect();
        let mut levels = vec![pts.iter().map(|p| p.y()).collect::<Vec<f64>>()];
        let mut width = 1;
        while width < pts.len() {
            let prev = levels.last().unwrap();
            let mut next = Vec::with_capacity(prev.len());
            for block in prev.chunks(2 * width) {
                let (a, b) = block.split_at(width.min(block.len()));
                merge_into(a, b, &mut next);
            }
            levels.push(next);
            width *= 2;
        }
        RangeTree { xs, levels }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Points in `[x0, x1] x [y0, y1]`, with the number of blocks and binary
    /// search steps spent.
    pub fn count(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> (u64, u64) {
        if !(x0 <= x1 && y0 <= y1) || self.xs.is_empty() {
            return (0, 1);
        }
        let mut ops = 2 * log2_ceil(self.xs.len() + 1);
        let mut i = self.xs.partition_point(|&x| x < x0);
        let mut j = self.xs.partition_point(|&x| x <= x1);
        let mut total = 0;
        let mut level = 0;
        let in_block = |level: usize, block: usize, ops: &mut u64| {
            let width = 1 << level;
            let ys = &self.levels[level];
            let s = &ys[block * width..((block + 1) * width).min(ys.len())];
            *ops += 2 * log2_ceil(s.len() + 1);
            (s.partition_point(|&y| y <= y1) - s.partition_point(|&y| y < y0)) as u64
        };
        while i < j {
            if i & 1 == 1 {
                total += in_block(level, i, &mut ops);
                i += 1;
            }
            if j & 1 == 1 {
                j -= 1;
                total += in_block(level, j, &mut ops);
            }
            i >>= 1;
            j >>= 1;
            level += 1;
        }
        (total, ops)
    }
}

fn log2_ceil(n: usize) -> u64 {
    (usize::BITS - n.saturating_sub(1).leading_zeros()) as u64
}

fn merge_into(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scan(pts: &[Point2], x0: f64, x1: f64, y0: f64, y1: f64) -> u64 {
        pts.iter()
            .filter(|p| x0 <= p.x() && p.x() <= x1 && y0 <= p.y() && p.y() <= y1)
            .count() as u64
    }

    #[test]
    fn matches_scan_on_grid_and_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [0, 1, 2, 3, 7, 100, 1023, 1025] {
            let pts: Vec<Point2> = (0..n)
                .map(|_| Point2::xy(rng.random_range(0..20) as f64, rng.random_range(0..20) as f64))
                .collect();
            let t = RangeTree::new(&pts);
            for _ in 0..2000 {
                let mut c = [0.0; 4];
                for v in &mut c {
                    *v = rng.random_range(-2..22) as f64;
                }
                assert_eq!(t.count(c[0], c[1], c[2], c[3]).0, scan(&pts, c[0], c[1], c[2], c[3]));
            }
        }
    }

    #[test]
    fn infinite_bounds() {
        let pts = [Point2::xy(1., 1.), Point2::xy(2., 5.)];
        let t = RangeTree::new(&pts);
        let inf = f64::INFINITY;
        assert_eq!(t.count(-inf, inf, -inf, inf).0, 2);
        assert_eq!(t.count(-inf, 1.5, 0.0, inf).0, 1);
        assert_eq!(t.count(inf, -inf, 0.0, 1.0).0, 0);
    }

    #[test]
    fn operation_count_is_polylogarithmic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point2> = (0..1 << 16).map(|_| Point2::xy(rng.random(), rng.random())).collect();
        let t = RangeTree::new(&pts);
        let (_, ops) = t.count(0.01, 0.99, 0.01, 0.99);
        assert!(ops <= 2 * 17 + 2 * 17 * 17);
    }
}
