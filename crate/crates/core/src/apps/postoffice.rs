use super::kdtree::KdTree;
use super::{AppError, DATA_SCALE};
use crate::geometry::{ConvexRegion, Point2};
use crate::tree::{BackupOracle, InterferenceOracle, Verdict};
use rand::Rng;

/// Nearest-site queries over distinct sites; the answer is the site index.
#[derive(Debug, Clone)]
pub struct PostOffice {
    index: KdTree,
}

/// Relative margin, on squared distances, by which a region vertex must be
/// closer to its site than to any other. Several thousand times the rounding
/// error of `dist2`.
const CELL_MARGIN: f64 = 1e-12;

impl PostOffice {
    pub fn new(sites: Vec<Point2>) -> Result<Self, AppError> {
        if sites.is_empty() {
            return Err(AppError::TooFew(1));
        }
        if let Some(i) = sites.iter().position(|p| !p.is_finite()) {
            return Err(AppError::NotFinite(i));
        }
        let mut sorted: Vec<usize> = (0..sites.len()).collect();
        sorted.sort_by(|&a, &b| sites[a].lex_cmp(&sites[b]).then(a.cmp(&b)));
        for w in sorted.windows(2) {
            if sites[w[0]] == sites[w[1]] {
                return Err(AppError::DuplicateSite(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        Ok(PostOffice {
            index: KdTree::new(sites),
        })
    }

    /// `n` uniform sites in the data square.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, AppError> {
        let sites = (0..n)
            .map(|_| Point2::xy(rng.random::<f64>() * DATA_SCALE, rng.random::<f64>() * DATA_SCALE))
            .collect();
        Self::new(sites)
    }

    pub fn sites(&self) -> &[Point2] {
        self.index.points()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Reference answer by a full distance scan, ties to the smaller index.
    pub fn scan(&self, q: &Point2) -> usize {
        let sites = self.sites();
        let mut best = (f64::INFINITY, 0);
        for (i, s) in sites.iter().enumerate() {
            let d = s.dist2(q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Distance from `v` to its nearest site other than `p`, compared with
    /// the distance to `p`.
    fn strictly_closer(&self, v: &Point2, p: usize, d_other: f64) -> bool {
        let d_p = self.sites()[p].dist2(v);
        d_other == f64::INFINITY || d_other - d_p > CELL_MARGIN * (d_other + d_p + 1.0)
    }

    /// Interference by scanning all sites for every region vertex.
    pub fn classify_scan(&self, region: &ConvexRegion) -> Verdict<usize> {
        self.classify_with(region, |v, p| {
            self.sites()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != p)
                .map(|(_, s)| s.dist2(v))
                .fold(f64::INFINITY, f64::min)
        })
    }

    fn classify_with(&self, region: &ConvexRegion, other: impl Fn(&Point2, usize) -> f64) -> Verdict<usize> {
        if region.is_empty() {
            return Verdict::Empty;
        }
        let Some(vs) = region.vertices() else {
            return Verdict::Mixed;
        };
        let p = self.answer(&vs[0]);
        if vs.iter().all(|v| self.strictly_closer(v, p, other(v, p))) {
            Verdict::Uniform(p)
        } else {
            Verdict::Mixed
        }
    }
}

impl BackupOracle for PostOffice {
    type Point = Point2;
    type Answer = usize;

    fn answer_counted(&self, q: &Point2) -> (usize, u64) {
        let n = self.index.nearest(q).expect("sites are non-empty");
        (n.index, n.visited)
    }
}

impl InterferenceOracle<ConvexRegion> for PostOffice {
    type Answer = usize;

    /// Uniform(p) iff every region vertex lies strictly inside the Voronoi
    /// cell of p, the site nearest the first vertex.
    fn classify(&self, region: &ConvexRegion) -> Verdict<usize> {
        self.classify_with(region, |v, p| {
            self.index
                .nearest_excluding(v, p)
                .map_or(f64::INFINITY, |n| n.dist2)
        })
    }
}
