//! Invariant checks on a built tree.

use crate::problem::{Problem, Tree};
use crate::workload::{derive_seed, purpose};
use oddson::geometry::Region;
use oddson::tree::{Label, SamplingOracle, Status, VisitFrequencies, ROOT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    fn push(&mut self, name: &'static str, failures: &[String], ok: String) {
        let passed = failures.is_empty();
        let detail = if passed {
            ok
        } else {
            let shown: Vec<&str> = failures.iter().take(5).map(String::as_str).collect();
            format!("{} violation(s); {}", failures.len(), shown.join("; "))
        };
        self.lines.push(CheckLine { name, passed, detail });
    }
}

pub struct CheckOptions {
    /// Random test lines for the crossing check.
    pub lines: usize,
    /// Points sampled per terminal region.
    pub soundness_samples: usize,
    /// Routed draws for the node-frequency check.
    pub frequency_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            lines: 100,
            soundness_samples: 100,
            frequency_samples: 100_000,
        }
    }
}

/// Upper bound on the visit frequency of a depth-`depth` node: `(3/4)^i`
/// plus three binomial standard errors at `n` draws. Binary splits count
/// two levels as one four-way level.
pub fn frequency_bound(depth: usize, arity: usize, n: u64) -> f64 {
    let levels = if arity >= 4 { depth } else { depth / 2 };
    let p = 0.75f64.powi(levels as i32);
    p + 3.0 * (p / n as f64).sqrt()
}

/// Run every check against `tree`, which was built from `dist`.
pub fn check_tree<P: Problem>(p: &P, tree: &Tree<P>, dist: &P::Dist, opts: &CheckOptions) -> CheckReport {
    let mut report = CheckReport::default();
    let seed = derive_seed(tree.config().seed, purpose::CHECK, 0);

    // Replay the construction sample and recount it per node.
    let mut rng = ChaCha8Rng::seed_from_u64(tree.config().seed);
    let root = &tree.node(ROOT).delta;
    let mut counts = vec![0usize; tree.nodes().len()];
    let mut first = vec![None; tree.nodes().len()];
    let mut identical = vec![true; tree.nodes().len()];
    let mut failures = Vec::new();
    for _ in 0..tree.sample_size() {
        let q = match dist.draw(&mut rng) {
            Ok(q) => q,
            Err(e) => {
                failures.push(format!("sampling failed: {e}"));
                break;
            }
        };
        if !root.contains(&q) {
            continue;
        }
        let mut v = Some(ROOT);
        while let Some(id) = v {
            counts[id] += 1;
            match first[id] {
                None => first[id] = Some(q),
                Some(f) => identical[id] &= f == q,
            }
            v = tree.route_child(id, &q);
        }
    }
    let r = tree.arity();
    for (id, node) in tree.nodes().iter().enumerate() {
        let limit = counts[id].div_ceil(r);
        for &c in node.children() {
            if counts[c] > limit && !identical[id] {
                failures.push(format!("node {c}: {} of {} samples, limit {limit}", counts[c], counts[id]));
            }
        }
    }
    let internal = tree.nodes().iter().filter(|n| !n.is_leaf()).count();
    report.push(
        "partition-sizes",
        &failures,
        format!("{internal} splits, every child within ceil(m/{r})"),
    );

    let crossings = P::crossing_violations(tree, opts.lines, &mut ChaCha8Rng::seed_from_u64(seed));
    report.push(
        "crossing-number",
        &crossings,
        format!("{} test lines, no split crossed too often", opts.lines),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let mut unsound = Vec::new();
    let mut checked = 0;
    for (id, node) in tree.nodes().iter().enumerate() {
        let Status::Terminal(Label::Answer(a)) = &node.status else { continue };
        checked += 1;
        for _ in 0..opts.soundness_samples {
            let Some(q) = node.poly.sample_uniform(&mut rng) else { break };
            let got = p.answer(&q);
            if &got != a {
                unsound.push(format!("node {id}: labelled {a:?} but {q:?} answers {got:?}"));
                break;
            }
        }
    }
    report.push(
        "terminal-soundness",
        &unsound,
        format!("{checked} terminal regions x {} points agree", opts.soundness_samples),
    );

    let mut freq = VisitFrequencies::new(tree.nodes().len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    for _ in 0..opts.frequency_samples {
        match dist.draw(&mut rng) {
            Ok(q) => tree.record_visit(&q, &mut freq),
            Err(_) => break,
        }
    }
    let unreachable: Vec<String> = (0..tree.nodes().len())
        .filter(|&id| matches!(tree.node(id).status, Status::Terminal(Label::Unreachable)) && freq.visits[id] > 0)
        .map(|id| format!("node {id}: unreachable but visited {} times", freq.visits[id]))
        .collect();
    report.push("unreachable-unvisited", &unreachable, "no query reached an empty region".into());

    let over: Vec<String> = tree
        .nodes()
        .iter()
        .enumerate()
        .filter_map(|(id, node)| {
            let f = freq.frequency(id);
            let bound = frequency_bound(node.depth, r, freq.total);
            (f > bound).then(|| format!("node {id} at depth {}: frequency {f} > {bound}", node.depth))
        })
        .collect();
    report.push(
        "node-frequency",
        &over,
        format!("{} draws, every node within its depth bound", freq.total),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BenchConfig;
    use crate::problem::Instance;
    use crate::workload::{build_tree, distribution_for, instance_for};
    use oddson::apps::{PostOffice, RectCount};
    use oddson::tree::DepthCap;

    fn cfg(app: &str, dims: usize) -> BenchConfig {
        let lo = vec!["0"; dims].join(",");
        let hi = vec!["1000"; dims].join(",");
        BenchConfig::from_json(&format!(
            r#"{{"app": "{app}", "n": 300, "tau": 1.0, "query_count": 100, "seed": 3,
                "distribution": {{"id": "u", "spec": {{"kind": "uniform_box", "lo": [{lo}], "hi": [{hi}]}}}}}}"#
        ))
        .unwrap()
    }

    fn light() -> CheckOptions {
        CheckOptions {
            lines: 20,
            soundness_samples: 50,
            frequency_samples: 20_000,
        }
    }

    #[test]
    fn fresh_trees_pass() {
        let c = cfg("postoffice", 2);
        let Instance::Postoffice(p) = instance_for(&c).unwrap() else { unreachable!() };
        let t = build_tree(&p, &c, 0, DepthCap::Practical).unwrap();
        let r = check_tree(&p, &t, &distribution_for::<PostOffice>(&c, 0).unwrap(), &light());
        assert!(r.passed(), "{:?}", r.lines);
        assert_eq!(r.lines.len(), 5);

        let c = cfg("rectcount", 4);
        let Instance::Rectcount(p) = instance_for(&c).unwrap() else { unreachable!() };
        let t = build_tree(&p, &c, 0, DepthCap::Practical).unwrap();
        let r = check_tree(&p, &t, &distribution_for::<RectCount>(&c, 0).unwrap(), &light());
        assert!(r.passed(), "{:?}", r.lines);
    }

    #[test]
    fn corrupted_label_is_reported_with_node_id() {
        let c = cfg("postoffice", 2);
        let Instance::Postoffice(p) = instance_for(&c).unwrap() else { unreachable!() };
        let mut t = build_tree(&p, &c, 0, DepthCap::Practical).unwrap();
        let id = (0..t.nodes().len())
            .find(|&i| matches!(t.node(i).status, Status::Terminal(Label::Answer(_))))
            .expect("some terminal node");
        let Status::Terminal(Label::Answer(a)) = t.node(id).status.clone() else { unreachable!() };
        t.set_status(id, Status::Terminal(Label::Answer((a + 1) % p.len())));
        let r = check_tree(&p, &t, &distribution_for::<PostOffice>(&c, 0).unwrap(), &light());
        assert!(!r.passed());
        let bad = r.lines.iter().find(|l| !l.passed).unwrap();
        assert_eq!(bad.name, "terminal-soundness");
        assert!(bad.detail.contains(&format!("node {id}:")), "{}", bad.detail);
    }

    #[test]
    fn frequency_bound_values() {
        assert!((frequency_bound(0, 4, 100) - 1.3).abs() < 1e-12);
        assert!(frequency_bound(2, 4, u64::MAX) < 0.5626);
        assert_eq!(frequency_bound(3, 2, 1 << 40), frequency_bound(1, 4, 1 << 40));
    }
}
