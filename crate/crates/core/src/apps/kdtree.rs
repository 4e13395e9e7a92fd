use crate::geometry::Point2;

/// Balanced 2-d tree over a fixed point set, stored implicitly: the range
/// `[lo, hi)` of `order` is split at `(lo + hi) / 2` on axis `depth % 2`.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point2>,
    order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub dist2: f64,
    /// Tree nodes whose point was examined.
    pub visited: u64,
}

impl KdTree {
    pub fn new(points: Vec<Point2>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        KdTree { points, order }
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

    /// Nearest point to `q`, ties broken by smaller index.
    pub fn nearest(&self, q: &Point2) -> Option<Nearest> {
        self.nearest_excluding(q, usize::MAX)
    }

    /// Nearest point to `q` other than `exclude`.
    pub fn nearest_excluding(&self, q: &Point2, exclude: usize) -> Option<Nearest> {
        let mut best = Nearest {
            index: usize::MAX,
            dist2: f64::INFINITY,
            visited: 0,
        };
        self.search(q, exclude, 0, self.order.len(), 0, &mut best);
        (best.index != usize::MAX).then_some(best)
    }

    fn search(&self, q: &Point2, exclude: usize, lo: usize, hi: usize, depth: usize, best: &mut Nearest) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let p = self.points[i];
        best.visited += 1;
        if i != exclude {
            let d2 = p.dist2(q);
            if d2 < best.dist2 || (d2 == best.dist2 && i < best.index) {
                best.index = i;
                best.dist2 = d2;
            }
        }
        let axis = depth % 2;
        let diff = q.0[axis] - p.0[axis];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, exclude, near.0, near.1, depth + 1, best);
        if diff * diff <= best.dist2 {
            self.search(q, exclude, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[Point2], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 2;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a].0[axis].total_cmp(&points[b].0[axis]).then(a.cmp(&b))
    });
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}
