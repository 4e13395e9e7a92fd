//! Query workloads, report rows and histogram sidecars.

use crate::config::{cap_label, BenchConfig};
use crate::problem::{Instance, Problem, Tree};
use crate::BenchError;
use oddson::entropy::entropy_from_counts;
use oddson::tree::{DepthCap, OddsOnConfig, OddsOnTree, SamplingError, SamplingOracle, Status};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

pub const SCHEMA_VERSION: u32 = 1;

/// Queries per shard. Shard `k` always uses generator stream `base + k`, so
/// results do not depend on the number of threads.
pub const SHARD: usize = 4096;

pub const COST_STREAMS: u64 = 0;
pub const ENTROPY_STREAMS: u64 = 1 << 40;

pub mod purpose {
    pub const INPUT: u64 = 1;
    pub const BUILD: u64 = 2;
    pub const DISTRIBUTION: u64 = 3;
    pub const CHECK: u64 = 4;
}

/// A 64-bit seed for `purpose` (and `index` within it) derived from `root`.
pub fn derive_seed(root: u64, purpose: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream((purpose << 32) | index);
    rng.next_u64()
}

pub fn instance_for(cfg: &BenchConfig) -> Result<Instance, BenchError> {
    let inst = match &cfg.input {
        Some(path) => Instance::load(cfg.app, path)?,
        None => Instance::generate(cfg.app, cfg.n, derive_seed(cfg.seed, purpose::INPUT, 0))?,
    };
    if inst.len() != cfg.n {
        return Err(BenchError::Config(format!(
            "config says n = {} but the input has {} points",
            cfg.n,
            inst.len()
        )));
    }
    Ok(inst)
}

pub fn distribution_for<P: Problem>(cfg: &BenchConfig, index: usize) -> Result<P::Dist, BenchError> {
    let d = &cfg.distributions.as_slice()[index];
    P::distribution(&d.spec, derive_seed(cfg.seed, purpose::DISTRIBUTION, index as u64))
        .map_err(|e| BenchError::Config(format!("distribution {:?}: {e}", d.id)))
}

pub fn tree_config<P: Problem>(p: &P, cfg: &BenchConfig, cap: DepthCap) -> OddsOnConfig {
    OddsOnConfig {
        n: cfg.n as u64,
        tau: cfg.tau,
        depth_cap: cap,
        min_samples: cfg.min_samples,
        seed: derive_seed(cfg.seed, purpose::BUILD, 0),
        model: p.model(),
        working_box: cfg.working_box,
    }
}

pub fn build_tree<P: Problem>(p: &P, cfg: &BenchConfig, index: usize, cap: DepthCap) -> Result<Tree<P>, BenchError> {
    let dist = distribution_for::<P>(cfg, index)?;
    OddsOnTree::build(tree_config(p, cfg, cap), &dist, p, &p.rule())
        .map_err(|e| BenchError::Config(format!("build failed: {e}")))
}

pub fn tree_meta(inst_hash: &str, cfg: &BenchConfig, index: usize, cap: DepthCap) -> Value {
    json!({
        "app": cfg.app,
        "app_hash": inst_hash,
        "distribution": cfg.distributions.as_slice()[index].id,
        "depth_cap_mode": cap_label(cap),
        "root_seed": cfg.seed.to_string(),
    })
}

/// Aggregated outcome of a batch of queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally<A> {
    pub queries: u64,
    pub visits: u64,
    pub visit_hist: BTreeMap<usize, u64>,
    pub fallbacks: u64,
    pub backup_ops: u64,
    /// Queries ending at each node.
    pub leaf_hits: Vec<u64>,
    pub outside: u64,
    pub answers: BTreeMap<A, u64>,
    pub mismatches: u64,
    /// A few mismatching queries, for diagnostics.
    pub mismatch_examples: Vec<String>,
}

impl<A: Ord + Clone> Tally<A> {
    pub fn new(nodes: usize) -> Self {
        Tally {
            queries: 0,
            visits: 0,
            visit_hist: BTreeMap::new(),
            fallbacks: 0,
            backup_ops: 0,
            leaf_hits: vec![0; nodes],
            outside: 0,
            answers: BTreeMap::new(),
            mismatches: 0,
            mismatch_examples: Vec::new(),
        }
    }

    pub fn merge(&mut self, o: Tally<A>) {
        self.queries += o.queries;
        self.visits += o.visits;
        for (k, v) in o.visit_hist {
            *self.visit_hist.entry(k).or_insert(0) += v;
        }
        self.fallbacks += o.fallbacks;
        self.backup_ops += o.backup_ops;
        for (a, b) in self.leaf_hits.iter_mut().zip(o.leaf_hits) {
            *a += b;
        }
        self.outside += o.outside;
        for (k, v) in o.answers {
            *self.answers.entry(k).or_insert(0) += v;
        }
        self.mismatches += o.mismatches;
        for e in o.mismatch_examples {
            if self.mismatch_examples.len() < 5 {
                self.mismatch_examples.push(e);
            }
        }
    }

    pub fn mean_visits(&self) -> f64 {
        self.visits as f64 / self.queries.max(1) as f64
    }

    pub fn mean_backup_ops(&self) -> f64 {
        self.backup_ops as f64 / self.queries.max(1) as f64
    }

    pub fn fallback_rate(&self) -> f64 {
        self.fallbacks as f64 / self.queries.max(1) as f64
    }

    /// Smallest visit count reached or exceeded by at most 1% of queries.
    pub fn p99_visits(&self) -> usize {
        let target = (0.99 * self.queries as f64).ceil() as u64;
        let mut seen = 0;
        for (&v, &c) in &self.visit_hist {
            seen += c;
            if seen >= target {
                return v;
            }
        }
        0
    }

    pub fn leaf_entropy(&self) -> f64 {
        entropy_from_counts(self.leaf_hits.iter().copied()).unwrap_or(0.0)
    }

    pub fn answer_entropy(&self) -> f64 {
        entropy_from_counts(self.answers.values().copied()).unwrap_or(0.0)
    }
}

/// Run `count` queries drawn from `dist`, through `tree` or, without one,
/// straight into the backup. With `verify` every answer is compared with
/// the linear-scan reference.
pub fn run_queries<P: Problem>(
    p: &P,
    tree: Option<&Tree<P>>,
    dist: &P::Dist,
    count: usize,
    stream_base: u64,
    threads: usize,
    verify: bool,
) -> Result<Tally<P::Output>, SamplingError> {
    let nodes = tree.map_or(1, |t| t.nodes().len());
    let shards = count.div_ceil(SHARD);
    let next = AtomicUsize::new(0);
    let worker = || -> Result<Vec<Tally<P::Output>>, SamplingError> {
        let mut done = Vec::new();
        loop {
            let k = next.fetch_add(1, Ordering::Relaxed);
            if k >= shards {
                return Ok(done);
            }
            let mut rng = P::stream(dist, stream_base + k as u64);
            let mut t = Tally::new(nodes);
            for _ in 0..SHARD.min(count - k * SHARD) {
                let q = dist.draw(&mut rng)?;
                let (answer, visits) = match tree {
                    Some(tree) => {
                        let s = tree.query(&q, p);
                        t.fallbacks += u64::from(s.used_backup);
                        t.backup_ops += s.backup_ops;
                        match s.leaf {
                            Some(l) => t.leaf_hits[l] += 1,
                            None => t.outside += 1,
                        }
                        (s.answer, s.nodes_visited)
                    }
                    None => {
                        let (a, ops) = p.answer_counted(&q);
                        t.fallbacks += 1;
                        t.backup_ops += ops;
                        t.leaf_hits[0] += 1;
                        (a, 1)
                    }
                };
                if verify {
                    let expected = p.scan(&q);
                    if expected != answer {
                        t.mismatches += 1;
                        if t.mismatch_examples.len() < 5 {
                            t.mismatch_examples
                                .push(format!("{q:?}: got {answer:?}, expected {expected:?}"));
                        }
                    }
                }
                t.queries += 1;
                t.visits += visits as u64;
                *t.visit_hist.entry(visits).or_insert(0) += 1;
                *t.answers.entry(answer).or_insert(0) += 1;
            }
            done.push(t);
        }
    };
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads.max(1)).map(|_| s.spawn(worker)).collect();
        handles.into_iter().map(|h| h.join().expect("query worker panicked")).collect()
    });
    let mut total = Tally::new(nodes);
    for r in results {
        for t in r? {
            total.merge(t);
        }
    }
    Ok(total)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub app: String,
    /// `filter` or `baseline`.
    pub mode: String,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub depth_cap_mode: String,
    pub depth_cap: usize,
    pub distribution: String,
    #[serde(rename = "N")]
    pub query_count: usize,
    pub mean_visits: f64,
    pub p99_visits: usize,
    pub fallback_rate: f64,
    /// Fraction of tree leaves that are terminal.
    pub terminal_fraction: f64,
    pub leaf_entropy_bits: f64,
    pub answer_entropy_bits: f64,
    pub mean_backup_ops: f64,
    pub seed: u64,
}

impl ReportRow {
    /// `mean_visits <= H_L / log2(4/3) + 3`.
    pub fn cost_bound(&self) -> f64 {
        self.leaf_entropy_bits / (4.0f64 / 3.0).log2() + 3.0
    }

    pub fn within_cost_bound(&self) -> bool {
        self.mean_visits <= self.cost_bound()
    }

    pub fn entropy_dominated(&self) -> bool {
        self.answer_entropy_bits <= self.leaf_entropy_bits + 0.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    pub depth: usize,
    pub nodes: usize,
    pub terminal: usize,
    /// Queries whose routing ended at this depth.
    pub leaf_hits: u64,
}

/// Per-run histograms written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub app: String,
    pub mode: String,
    pub distribution: String,
    pub depth_cap_mode: String,
    pub seed: u64,
    pub visits_histogram: BTreeMap<usize, u64>,
    pub depths: Vec<DepthStats>,
    pub outside: u64,
}

pub struct RunOutcome<A> {
    pub row: ReportRow,
    pub sidecar: Sidecar,
    pub cost: Tally<A>,
}

pub struct RunOptions {
    pub baseline: bool,
    pub threads: usize,
    pub verify: bool,
}

/// Measure one (distribution, depth cap) pair; `tree` defaults to a fresh build.
pub fn run_pair<P: Problem>(
    p: &P,
    cfg: &BenchConfig,
    index: usize,
    cap: DepthCap,
    tree: Option<Tree<P>>,
    opts: &RunOptions,
) -> Result<RunOutcome<P::Output>, BenchError> {
    let dist = distribution_for::<P>(cfg, index)?;
    let tree = match (opts.baseline, tree) {
        (true, _) => None,
        (false, Some(t)) => Some(t),
        (false, None) => Some(build_tree(p, cfg, index, cap)?),
    };
    let sampling = |e: SamplingError| BenchError::Config(e.to_string());
    let cost = run_queries(p, tree.as_ref(), &dist, cfg.query_count, COST_STREAMS, opts.threads, opts.verify)
        .map_err(sampling)?;
    let ent = run_queries(p, tree.as_ref(), &dist, cfg.entropy_samples, ENTROPY_STREAMS, opts.threads, false)
        .map_err(sampling)?;
    let tc = tree_config(p, cfg, cap);
    let (m, depth_cap, terminal_fraction) = match &tree {
        Some(t) => {
            let leaves = t.leaves().count();
            let terminal = t.leaves().filter(|&l| matches!(t.node(l).status, Status::Terminal(_))).count();
            (t.sample_size(), t.depth_cap(), terminal as f64 / leaves as f64)
        }
        None => (tc.sample_size(), 0, 0.0),
    };
    let mode = if opts.baseline { "baseline" } else { "filter" }.to_owned();
    let dist_id = cfg.distributions.as_slice()[index].id.clone();
    let row = ReportRow {
        schema_version: SCHEMA_VERSION,
        app: cfg.app.to_string(),
        mode: mode.clone(),
        n: cfg.n,
        m,
        tau: cfg.tau,
        depth_cap_mode: cap_label(cap),
        depth_cap,
        distribution: dist_id.clone(),
        query_count: cfg.query_count,
        mean_visits: cost.mean_visits(),
        p99_visits: cost.p99_visits(),
        fallback_rate: cost.fallback_rate(),
        terminal_fraction,
        leaf_entropy_bits: ent.leaf_entropy(),
        answer_entropy_bits: ent.answer_entropy(),
        mean_backup_ops: cost.mean_backup_ops(),
        seed: cfg.seed,
    };
    let mut depths: BTreeMap<usize, DepthStats> = BTreeMap::new();
    if let Some(t) = &tree {
        for (id, node) in t.nodes().iter().enumerate() {
            let d = depths.entry(node.depth).or_insert(DepthStats {
                depth: node.depth,
                nodes: 0,
                terminal: 0,
                leaf_hits: 0,
            });
            d.nodes += 1;
            d.terminal += usize::from(matches!(node.status, Status::Terminal(_)));
            d.leaf_hits += cost.leaf_hits[id];
        }
    }
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION,
        app: cfg.app.to_string(),
        mode,
        distribution: dist_id,
        depth_cap_mode: cap_label(cap),
        seed: cfg.seed,
        visits_histogram: cost.visit_hist.clone(),
        depths: depths.into_values().collect(),
        outside: cost.outside,
    };
    Ok(RunOutcome { row, sidecar, cost })
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("histograms.jsonl")
}

fn io(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

/// Append `row` to the CSV at `path`, writing the header for a new file.
pub fn append_row(path: &Path, row: &ReportRow) -> Result<(), BenchError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    if !fresh {
        let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
        let header = r.headers().map_err(|e| io(path, e))?.clone();
        if header.get(0) != Some("schema_version") {
            return Err(BenchError::Config(format!("{} is not a report CSV", path.display())));
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row).map_err(|e| io(path, e))?;
    w.flush().map_err(|e| io(path, e))
}

pub fn append_sidecar(path: &Path, sidecar: &Sidecar) -> Result<(), BenchError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io(path, e))?;
    let line = serde_json::to_string(sidecar).expect("sidecars always serialise");
    writeln!(file, "{line}").map_err(|e| io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| BenchError::Config(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BenchConfig;
    use oddson::apps::PostOffice;

    fn config() -> BenchConfig {
        BenchConfig::from_json(
            r#"{"app": "postoffice", "n": 200, "tau": 1.0, "query_count": 10000, "seed": 7,
                "entropy_samples": 5000,
                "distribution": {"id": "u", "spec": {"kind": "uniform_box", "lo": [0, 0], "hi": [1000, 1000]}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn seeds_differ_by_purpose() {
        let s: Vec<u64> = [(1, 0), (2, 0), (1, 1)].iter().map(|&(p, i)| derive_seed(5, p, i)).collect();
        assert!(s[0] != s[1] && s[0] != s[2]);
        assert_eq!(derive_seed(5, 1, 0), s[0]);
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let cfg = config();
        let Instance::Postoffice(p) = instance_for(&cfg).unwrap() else { unreachable!() };
        let tree = build_tree(&p, &cfg, 0, DepthCap::Practical).unwrap();
        let dist = distribution_for::<PostOffice>(&cfg, 0).unwrap();
        let one = run_queries(&p, Some(&tree), &dist, 10_000, 0, 1, true).unwrap();
        let four = run_queries(&p, Some(&tree), &dist, 10_000, 0, 4, true).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.queries, 10_000);
        assert_eq!(one.mismatches, 0);
        assert_eq!(one.leaf_hits.iter().sum::<u64>() + one.outside, 10_000);
    }

    #[test]
    fn baseline_visits_once_and_always_falls_back() {
        let cfg = config();
        let Instance::Postoffice(p) = instance_for(&cfg).unwrap() else { unreachable!() };
        let opts = RunOptions { baseline: true, threads: 2, verify: true };
        let out = run_pair(&p, &cfg, 0, DepthCap::Practical, None, &opts).unwrap();
        assert_eq!(out.row.mean_visits, 1.0);
        assert_eq!(out.row.fallback_rate, 1.0);
        assert_eq!(out.row.leaf_entropy_bits, 0.0);
        assert_eq!(out.cost.mismatches, 0);
        assert!(out.row.mean_backup_ops > 1.0);
    }

    #[test]
    fn p99_from_histogram() {
        let mut t: Tally<u8> = Tally::new(1);
        t.queries = 100;
        t.visit_hist.insert(2, 98);
        t.visit_hist.insert(5, 1);
        t.visit_hist.insert(9, 1);
        assert_eq!(t.p99_visits(), 5);
    }

    #[test]
    fn csv_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let cfg = config();
        let Instance::Postoffice(p) = instance_for(&cfg).unwrap() else { unreachable!() };
        let opts = RunOptions { baseline: false, threads: 2, verify: false };
        let out = run_pair(&p, &cfg, 0, DepthCap::Practical, None, &opts).unwrap();
        append_row(&path, &out.row).unwrap();
        append_row(&path, &out.row).unwrap();
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows, vec![out.row.clone(), out.row]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("schema_version,app,mode,n,m,tau,depth_cap_mode,depth_cap,distribution,N,"));
        assert_eq!(text.lines().count(), 3);
        assert!(sidecar_path(&path).to_string_lossy().ends_with("r.histograms.jsonl"));
    }
}
