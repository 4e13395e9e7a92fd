//! Glue that lets the harness drive all three apps through one generic path.

use crate::config::AppKind;
use crate::BenchError;
use oddson::apps::{ConvexPolygon, PostOffice, RectCount};
use oddson::distributions::{DistributionError, DistributionSpec, QueryDistribution};
use oddson::geometry::{Box4, ConvexRegion, HalfPlane, Point2, Point4, Region};
use oddson::partition::{KdRule, Model, SplitRule, TwoLineRule};
use oddson::tree::{Answer, BackupOracle, InterferenceOracle, OddsOnTree, RegionCodec, SamplingOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::{Debug, Write as _};
use std::path::Path;

pub type Tree<P> = OddsOnTree<<P as Problem>::Region, <P as Problem>::Output>;

/// An app as seen by the harness.
pub trait Problem:
    BackupOracle<Point = <Self as Problem>::Query, Answer = <Self as Problem>::Output>
    + InterferenceOracle<<Self as Problem>::Region, Answer = <Self as Problem>::Output>
    + Sync
{
    const KIND: AppKind;
    type Query: Copy + Debug + PartialEq + Send + Sync;
    type Region: Region<Point = <Self as Problem>::Query> + RegionCodec;
    type Output: Answer;
    type Rule: SplitRule<Region = Self::Region> + Sync;
    type Dist: SamplingOracle<Point = <Self as Problem>::Query> + Sync;

    fn rule(&self) -> Self::Rule;

    fn model(&self) -> Model;

    /// Linear-scan reference answer.
    fn scan(&self, q: &<Self as Problem>::Query) -> <Self as Problem>::Output;

    fn distribution(spec: &DistributionSpec, seed: u64) -> Result<Self::Dist, DistributionError>;

    fn stream(dist: &Self::Dist, stream: u64) -> ChaCha8Rng;

    /// One input point per line, `x y`.
    fn input_points(&self) -> &[Point2];

    /// Descriptions of crossing-number violations against `lines` random
    /// test hyperplanes.
    fn crossing_violations(tree: &Tree<Self>, lines: usize, rng: &mut ChaCha8Rng) -> Vec<String>
    where
        Self: Sized;
}

fn planar_crossings<A: Answer>(tree: &OddsOnTree<ConvexRegion, A>, lines: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut out = Vec::new();
    for _ in 0..lines {
        let t = rng.random::<f64>() * std::f64::consts::PI;
        let through = Point2::xy(rng.random::<f64>() * 1000.0, rng.random::<f64>() * 1000.0);
        let line = HalfPlane::through([t.cos(), t.sin()], through).expect("unit normal");
        for (id, node) in tree.nodes().iter().enumerate() {
            let crossed = node
                .children()
                .iter()
                .filter(|&&c| tree.node(c).poly.interior_meets_line(&line))
                .count();
            if crossed > 3 {
                out.push(format!("node {id}: a line crosses {crossed} child interiors"));
            }
        }
    }
    out
}

macro_rules! planar_common {
    () => {
        type Query = Point2;
        type Region = ConvexRegion;
        type Rule = TwoLineRule;
        type Dist = QueryDistribution<2>;

        fn rule(&self) -> TwoLineRule {
            TwoLineRule
        }

        fn model(&self) -> Model {
            Model::Linear2d
        }

        fn distribution(spec: &DistributionSpec, seed: u64) -> Result<Self::Dist, DistributionError> {
            QueryDistribution::from_spec(spec, seed)
        }

        fn stream(dist: &Self::Dist, stream: u64) -> ChaCha8Rng {
            dist.rng(stream)
        }

        fn crossing_violations(tree: &Tree<Self>, lines: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
            planar_crossings(tree, lines, rng)
        }
    };
}

impl Problem for ConvexPolygon {
    const KIND: AppKind = AppKind::Polygon;
    type Output = oddson::apps::Membership;
    planar_common!();

    fn scan(&self, q: &Point2) -> oddson::apps::Membership {
        ConvexPolygon::scan(self, q)
    }

    fn input_points(&self) -> &[Point2] {
        self.vertices()
    }
}

impl Problem for PostOffice {
    const KIND: AppKind = AppKind::Postoffice;
    type Output = usize;
    planar_common!();

    fn scan(&self, q: &Point2) -> usize {
        PostOffice::scan(self, q)
    }

    fn input_points(&self) -> &[Point2] {
        self.sites()
    }
}

impl Problem for RectCount {
    const KIND: AppKind = AppKind::Rectcount;
    type Query = Point4;
    type Region = Box4;
    type Output = u64;
    type Rule = KdRule<4>;
    type Dist = QueryDistribution<4>;

    fn rule(&self) -> KdRule<4> {
        KdRule
    }

    fn model(&self) -> Model {
        Model::Comparison
    }

    fn scan(&self, q: &Point4) -> u64 {
        RectCount::scan(self, q)
    }

    fn distribution(spec: &DistributionSpec, seed: u64) -> Result<Self::Dist, DistributionError> {
        QueryDistribution::from_spec(spec, seed)
    }

    fn stream(dist: &Self::Dist, stream: u64) -> ChaCha8Rng {
        dist.rng(stream)
    }

    fn input_points(&self) -> &[Point2] {
        self.points()
    }

    /// An axis-parallel hyperplane on a node's split axis meets at most one
    /// child interior.
    fn crossing_violations(tree: &Tree<Self>, lines: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let mut out = Vec::new();
        for _ in 0..lines {
            let axis = rng.random_range(0..4);
            let value = rng.random::<f64>() * 1000.0;
            for (id, node) in tree.nodes().iter().enumerate() {
                if node.depth % 4 != axis {
                    continue;
                }
                let crossed = node
                    .children()
                    .iter()
                    .filter(|&&c| tree.node(c).poly.interior_meets_hyperplane(axis, value))
                    .count();
                if crossed > 1 {
                    out.push(format!("node {id}: a hyperplane crosses {crossed} child interiors"));
                }
            }
        }
        out
    }
}

/// A concrete app instance.
#[derive(Debug, Clone)]
pub enum Instance {
    Polygon(ConvexPolygon),
    Postoffice(PostOffice),
    Rectcount(RectCount),
}

/// Evaluate `$body` with `$p` bound to the concrete app inside `$inst`.
#[macro_export]
macro_rules! with_instance {
    ($inst:expr, $p:ident => $body:expr) => {
        match $inst {
            $crate::problem::Instance::Polygon($p) => $body,
            $crate::problem::Instance::Postoffice($p) => $body,
            $crate::problem::Instance::Rectcount($p) => $body,
        }
    };
}

impl Instance {
    pub fn kind(&self) -> AppKind {
        match self {
            Instance::Polygon(_) => AppKind::Polygon,
            Instance::Postoffice(_) => AppKind::Postoffice,
            Instance::Rectcount(_) => AppKind::Rectcount,
        }
    }

    pub fn generate(kind: AppKind, n: usize, seed: u64) -> Result<Self, BenchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = match kind {
            AppKind::Polygon => ConvexPolygon::random(n, &mut rng).map(Instance::Polygon),
            AppKind::Postoffice => PostOffice::random(n, &mut rng).map(Instance::Postoffice),
            AppKind::Rectcount => RectCount::random(n, &mut rng).map(Instance::Rectcount),
        };
        r.map_err(|e| BenchError::Config(format!("cannot generate {kind} input: {e}")))
    }

    pub fn from_points(kind: AppKind, points: Vec<Point2>) -> Result<Self, BenchError> {
        let r = match kind {
            AppKind::Polygon => ConvexPolygon::new(points).map(Instance::Polygon),
            AppKind::Postoffice => PostOffice::new(points).map(Instance::Postoffice),
            AppKind::Rectcount => RectCount::new(points).map(Instance::Rectcount),
        };
        r.map_err(|e| BenchError::Config(format!("invalid {kind} input: {e}")))
    }

    pub fn load(kind: AppKind, path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_points(kind, parse_points(&text)?)
    }

    pub fn points(&self) -> &[Point2] {
        with_instance!(self, p => p.input_points())
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    pub fn input_text(&self) -> String {
        format_points(self.points())
    }

    /// SHA-256 of the app kind and its canonical input text.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind().to_string().as_bytes());
        h.update(b"\n");
        h.update(self.input_text().as_bytes());
        hex::encode(h.finalize())
    }
}

pub fn format_points(points: &[Point2]) -> String {
    let mut s = String::with_capacity(points.len() * 40);
    for p in points {
        let _ = writeln!(s, "{} {}", p.x(), p.y());
    }
    s
}

/// Whitespace-separated decimals, one point per line; blank lines and lines
/// starting with `#` are skipped.
pub fn parse_points(text: &str) -> Result<Vec<Point2>, BenchError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed.as_deref() {
            Ok([x, y]) if x.is_finite() && y.is_finite() => out.push(Point2::xy(*x, *y)),
            _ => {
                return Err(BenchError::Config(format!(
                    "line {}: expected two finite decimals, found {line:?}",
                    no + 1
                )))
            }
        }
    }
    Ok(out)
}
