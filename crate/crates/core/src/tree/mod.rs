//! The odds-on tree: a sample partition tree trimmed by an interference
//! oracle, answering queries directly at terminal leaves and deferring to a
//! backup structure everywhere else.

mod oracle;
mod serialize;

pub use oracle::{
    Answer, BackupOracle, InterferenceOracle, NeverUniform, SamplingError, SamplingOracle, Verdict,
};
pub use serialize::{CodecError, RegionCodec, FORMAT_NAME, FORMAT_VERSION};

use crate::entropy::{entropy_bits, EntropyError};
use crate::geometry::Region;
use crate::partition::{Model, SplitRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// How the maximum depth is derived from the sample size `m` and arity `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DepthCap {
    /// `floor(log_{r/3}(m) / 4)`. For `r <= 3` two consecutive levels are
    /// treated as one `r^2`-way split.
    #[default]
    Construction,
    /// `floor(log_r(m) / 4)`.
    Theoretical,
    /// `ceil(log_r(m))`.
    Practical,
    Explicit(usize),
}

impl DepthCap {
    pub fn resolve(self, m: usize, arity: usize) -> usize {
        let m = m.max(1) as f64;
        let r = arity.max(2) as f64;
        let log = |base: f64| m.ln() / base.ln();
        match self {
            DepthCap::Construction if arity > 3 => floor_eps(log(r / 3.0) / 4.0).max(1),
            DepthCap::Construction => 2 * floor_eps(log(r * r / 3.0) / 4.0).max(1),
            DepthCap::Theoretical => floor_eps(log(r) / 4.0).max(1),
            DepthCap::Practical => ceil_eps(log(r)).max(1),
            DepthCap::Explicit(k) => k,
        }
    }
}

fn floor_eps(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

fn ceil_eps(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsOnConfig {
    /// Input size of the backup structure.
    pub n: u64,
    /// Sample exponent; the tree is built over `ceil(n^tau)` samples.
    pub tau: f64,
    pub depth_cap: DepthCap,
    /// Nodes holding at most this many samples are not split.
    pub min_samples: usize,
    pub seed: u64,
    pub model: Model,
    /// Construction happens inside `[lo, hi]^d`; queries outside go to the
    /// backup directly.
    pub working_box: (f64, f64),
}

impl OddsOnConfig {
    pub fn new(n: u64, tau: f64, model: Model) -> Self {
        OddsOnConfig {
            n,
            tau,
            depth_cap: DepthCap::default(),
            min_samples: 1,
            seed: 0,
            model,
            working_box: (-1e6, 1e6),
        }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |m: &str| Err(BuildError::InvalidConfig(m.to_owned()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.min_samples == 0 {
            return bad("min_samples must be at least 1");
        }
        let (lo, hi) = self.working_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("working box must be finite with lo < hi");
        }
        Ok(())
    }

    /// `m = max(1, ceil(n^tau))`.
    pub fn sample_size(&self) -> usize {
        ceil_eps((self.n as f64).powf(self.tau)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("split rule works in the {rule:?} model but the configuration says {config:?}")]
    ModelMismatch { config: Model, rule: Model },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label<A> {
    Answer(A),
    /// The node's region is empty; no query can reach it.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status<A> {
    Terminal(Label<A>),
    /// Non-terminal leaf: queries ending here use the backup.
    Frontier,
    Internal(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<R, A> {
    /// Region handed down by the split that created this node.
    pub delta: R,
    /// `delta` intersected with the deltas of all ancestors.
    pub poly: R,
    pub depth: usize,
    pub parent: Option<usize>,
    pub status: Status<A>,
}

impl<R, A> Node<R, A> {
    pub fn is_leaf(&self) -> bool {
        !matches!(self.status, Status::Internal(_))
    }

    pub fn children(&self) -> &[usize] {
        match &self.status {
            Status::Internal(c) => c,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildStats {
    pub samples_drawn: usize,
    /// Samples that fell outside the working box and were dropped.
    pub samples_outside: usize,
    pub interference_calls: usize,
    /// Largest number of pieces an interference test was split into.
    pub max_pieces: usize,
}

/// Result of routing a query down the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Routing ended at this leaf after visiting `visited` nodes.
    Leaf { node: usize, visited: usize },
    /// The query lies outside the working box.
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryStats<A> {
    pub nodes_visited: usize,
    pub used_backup: bool,
    pub answer: A,
    /// Operations spent inside the backup structure (0 for terminal hits).
    pub backup_ops: u64,
    /// Leaf reached, `None` when the query left the working box.
    pub leaf: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OddsOnTree<R, A> {
    config: OddsOnConfig,
    sample_size: usize,
    depth_cap: usize,
    arity: usize,
    nodes: Vec<Node<R, A>>,
    build_stats: BuildStats,
}

pub const ROOT: usize = 0;

impl<R: Region, A: Answer> OddsOnTree<R, A> {
    /// Draw the sample, split recursively and trim with the interference
    /// oracle.
    ///
    /// Nodes are created breadth-first and tested on creation: a node whose
    /// `poly` is certified uniform becomes terminal and is never split, which
    /// is the same tree as splitting everything and trimming top-down.
    pub fn build<S, I, X>(
        config: OddsOnConfig,
        sampler: &S,
        interference: &I,
        rule: &X,
    ) -> Result<Self, BuildError>
    where
        S: SamplingOracle<Point = R::Point> + ?Sized,
        I: InterferenceOracle<R, Answer = A> + ?Sized,
        X: SplitRule<Region = R> + ?Sized,
    {
        config.validate()?;
        if rule.model() != config.model {
            return Err(BuildError::ModelMismatch {
                config: config.model,
                rule: rule.model(),
            });
        }
        let m = config.sample_size();
        let depth_cap = config.depth_cap.resolve(m, rule.arity());
        let root_region = R::working(config.working_box.0, config.working_box.1);

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut stats = BuildStats {
            samples_drawn: m,
            ..BuildStats::default()
        };
        let mut sample = Vec::with_capacity(m);
        for _ in 0..m {
            let q = sampler.draw(&mut rng)?;
            if root_region.contains(&q) {
                sample.push(q);
            } else {
                stats.samples_outside += 1;
            }
        }

        let mut nodes = vec![Node {
            delta: root_region.clone(),
            poly: root_region,
            depth: 0,
            parent: None,
            status: Status::Frontier,
        }];
        let mut queue = VecDeque::from([(ROOT, sample)]);
        while let Some((id, sample)) = queue.pop_front() {
            let node = &nodes[id];
            let status = if node.poly.is_empty() {
                Status::Terminal(Label::Unreachable)
            } else if let Some(a) = certify(&node.poly, interference, &mut stats) {
                Status::Terminal(Label::Answer(a))
            } else if node.depth < depth_cap && sample.len() > config.min_samples {
                let split = rule.split(&sample, node.depth);
                let (depth, first) = (node.depth + 1, nodes.len());
                let parent_poly = node.poly.clone();
                for (delta, members) in split.children.into_iter().zip(split.assignment) {
                    let child = nodes.len();
                    nodes.push(Node {
                        poly: parent_poly.intersect(&delta),
                        delta,
                        depth,
                        parent: Some(id),
                        status: Status::Frontier,
                    });
                    queue.push_back((child, members.into_iter().map(|i| sample[i]).collect()));
                }
                Status::Internal((first..nodes.len()).collect())
            } else {
                Status::Frontier
            };
            nodes[id].status = status;
        }

        Ok(OddsOnTree {
            config,
            sample_size: m,
            depth_cap,
            arity: rule.arity(),
            nodes,
            build_stats: stats,
        })
    }

    /// Index of the first child of `node` whose delta contains `q`.
    pub fn route_child(&self, node: usize, q: &R::Point) -> Option<usize> {
        self.nodes[node]
            .children()
            .iter()
            .copied()
            .find(|&c| self.nodes[c].delta.contains(q))
    }

    pub fn route(&self, q: &R::Point) -> Route {
        if !self.nodes[ROOT].delta.contains(q) {
            return Route::Outside;
        }
        let mut node = ROOT;
        let mut visited = 1;
        while !self.nodes[node].is_leaf() {
            match self.route_child(node, q) {
                Some(c) => {
                    node = c;
                    visited += 1;
                }
                // Children cover their parent; only reachable through
                // non-finite coordinates.
                None => break,
            }
        }
        Route::Leaf { node, visited }
    }

    pub fn query<B>(&self, q: &R::Point, backup: &B) -> QueryStats<A>
    where
        B: BackupOracle<Point = R::Point, Answer = A> + ?Sized,
    {
        let (leaf, visited) = match self.route(q) {
            Route::Outside => (None, 1),
            Route::Leaf { node, visited } => (Some(node), visited),
        };
        if let Some(id) = leaf {
            if let Status::Terminal(Label::Answer(a)) = &self.nodes[id].status {
                return QueryStats {
                    nodes_visited: visited,
                    used_backup: false,
                    answer: a.clone(),
                    backup_ops: 0,
                    leaf,
                };
            }
        }
        let (answer, backup_ops) = backup.answer_counted(q);
        QueryStats {
            nodes_visited: visited,
            used_backup: true,
            answer,
            backup_ops,
            leaf,
        }
    }

    /// Route `samples` fresh draws and count node visits.
    pub fn estimate_leaf_probabilities<S, G>(
        &self,
        sampler: &S,
        samples: usize,
        rng: &mut G,
    ) -> Result<VisitFrequencies, SamplingError>
    where
        S: SamplingOracle<Point = R::Point> + ?Sized,
        G: Rng + ?Sized,
    {
        let mut freq = VisitFrequencies::new(self.nodes.len());
        for _ in 0..samples {
            let q = sampler.draw(rng)?;
            self.record_visit(&q, &mut freq);
        }
        Ok(freq)
    }

    /// Add the routing path of `q` to `freq`.
    pub fn record_visit(&self, q: &R::Point, freq: &mut VisitFrequencies) {
        freq.total += 1;
        if let Route::Leaf { node, .. } = self.route(q) {
            let mut v = Some(node);
            while let Some(id) = v {
                freq.visits[id] += 1;
                v = self.nodes[id].parent;
            }
        } else {
            freq.outside += 1;
        }
    }

    pub fn config(&self) -> &OddsOnConfig {
        &self.config
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nodes(&self) -> &[Node<R, A>] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node<R, A> {
        &self.nodes[id]
    }

    pub fn build_stats(&self) -> &BuildStats {
        &self.build_stats
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn terminal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.status, Status::Terminal(_)))
            .count()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Overwrite a node's status. Intended for fault-injection fixtures.
    pub fn set_status(&mut self, id: usize, status: Status<A>) {
        self.nodes[id].status = status;
    }
}

/// Certify `poly` by testing every piece of its decomposition.
fn certify<R, I, A>(poly: &R, oracle: &I, stats: &mut BuildStats) -> Option<A>
where
    R: Region,
    I: InterferenceOracle<R, Answer = A> + ?Sized,
    A: PartialEq,
{
    let pieces = poly.pieces();
    stats.max_pieces = stats.max_pieces.max(pieces.len());
    let mut label = None;
    for piece in &pieces {
        stats.interference_calls += 1;
        match oracle.classify(piece) {
            Verdict::Mixed => return None,
            Verdict::Empty => {}
            Verdict::Uniform(a) => match &label {
                None => label = Some(a),
                Some(b) if *b == a => {}
                Some(_) => return None,
            },
        }
    }
    label
}

/// Per-node visit counts of a batch of routed queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitFrequencies {
    pub visits: Vec<u64>,
    pub outside: u64,
    pub total: u64,
}

impl VisitFrequencies {
    pub fn new(nodes: usize) -> Self {
        VisitFrequencies {
            visits: vec![0; nodes],
            outside: 0,
            total: 0,
        }
    }

    pub fn merge(&mut self, other: &VisitFrequencies) {
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        self.outside += other.outside;
        self.total += other.total;
    }

    pub fn frequency(&self, node: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.visits[node] as f64 / self.total as f64
        }
    }

    pub fn outside_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.outside as f64 / self.total as f64
        }
    }

    /// `(leaf, frequency)` for every leaf of `tree`.
    pub fn leaf_frequencies<R: Region, A: Answer>(&self, tree: &OddsOnTree<R, A>) -> Vec<(usize, f64)> {
        tree.leaves().map(|l| (l, self.frequency(l))).collect()
    }

    /// Entropy of the leaf distribution, mass outside the box excluded.
    pub fn leaf_entropy<R: Region, A: Answer>(&self, tree: &OddsOnTree<R, A>) -> Result<f64, EntropyError> {
        let p: Vec<f64> = self.leaf_frequencies(tree).into_iter().map(|(_, f)| f).collect();
        leaf_entropy(&p)
    }
}

/// Entropy in bits of leaf probabilities, renormalised to sum to one.
pub fn leaf_entropy(probabilities: &[f64]) -> Result<f64, EntropyError> {
    entropy_bits(probabilities)
}
