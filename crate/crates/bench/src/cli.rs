use crate::check::{check_tree, CheckOptions};
use crate::config::{cap_label, parse_cap, BenchConfig};
use crate::problem::{Problem, Tree};
use crate::workload::{
    append_row, append_sidecar, build_tree, distribution_for, instance_for, read_rows, run_pair, sidecar_path,
    tree_meta, RunOptions,
};
use crate::{with_instance, BenchError};
use clap::{Parser, Subcommand};
use oddson::tree::{DepthCap, OddsOnTree, Status};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "oddson", version, about = "Build, benchmark and check odds-on trees")]
pub struct Cli {
    /// JSON benchmark configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configuration's root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path (input file, tree JSON or CSV report, by command).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for query workloads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Bypass the filter and send every query to the backup structure.
    #[arg(long, global = true)]
    pub baseline: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the app input, one point per line.
    Gen,
    /// Build one tree and write it as JSON.
    Build {
        /// Distribution id; defaults to the first one.
        #[arg(long)]
        distribution: Option<String>,
        /// construction, theoretical, practical or explicit:K; defaults to the first one.
        #[arg(long)]
        depth_cap: Option<String>,
    },
    /// Run query workloads and append one CSV row per run.
    Bench {
        /// Use a previously built tree instead of building.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Compare every answer with the linear-scan reference.
        #[arg(long)]
        verify: bool,
    },
    /// Verify partition, soundness and frequency invariants.
    Check {
        #[arg(long)]
        tree: Option<PathBuf>,
    },
    /// Summarise a CSV report against the entropy bounds.
    Report,
}

pub fn run(cli: &Cli) -> Result<(), BenchError> {
    let Some(path) = &cli.config else {
        return Err(BenchError::Config("--config is required".into()));
    };
    let mut cfg = BenchConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(BenchError::Config("--threads must be positive".into()));
    }
    match &cli.command {
        Command::Gen => cmd_gen(&cfg, cli.out.as_deref()),
        Command::Build { distribution, depth_cap } => {
            let out = cli
                .out
                .as_deref()
                .ok_or_else(|| BenchError::Config("build needs --out".into()))?;
            let (index, cap) = select_pair(&cfg, distribution.as_deref(), depth_cap.as_deref())?;
            let inst = instance_for(&cfg)?;
            let hash = inst.hash();
            with_instance!(&inst, p => cmd_build(p, &cfg, &hash, index, cap, out))
        }
        Command::Bench { tree, verify } => {
            let out = csv_path(&cfg, cli.out.as_deref())?;
            let opts = RunOptions {
                baseline: cli.baseline,
                threads,
                verify: *verify,
            };
            let inst = instance_for(&cfg)?;
            let hash = inst.hash();
            with_instance!(&inst, p => cmd_bench(p, &cfg, &hash, tree.as_deref(), &opts, &out))
        }
        Command::Check { tree } => {
            let inst = instance_for(&cfg)?;
            let hash = inst.hash();
            with_instance!(&inst, p => cmd_check(p, &cfg, &hash, tree.as_deref()))
        }
        Command::Report => cmd_report(&csv_path(&cfg, cli.out.as_deref())?),
    }
}

fn csv_path(cfg: &BenchConfig, out: Option<&Path>) -> Result<PathBuf, BenchError> {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| BenchError::Config("no report path: pass --out or set \"output\"".into()))
}

fn select_pair(cfg: &BenchConfig, dist: Option<&str>, cap: Option<&str>) -> Result<(usize, DepthCap), BenchError> {
    let index = match dist {
        Some(id) => cfg
            .distribution(id)
            .ok_or_else(|| BenchError::Config(format!("no distribution {id:?} in config")))?
            .0,
        None => 0,
    };
    let cap = match cap {
        Some(s) => parse_cap(s)?,
        None => cfg.depth_caps.as_slice()[0],
    };
    Ok((index, cap))
}

fn cmd_gen(cfg: &BenchConfig, out: Option<&Path>) -> Result<(), BenchError> {
    let text = instance_for(cfg)?.input_text();
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_build<P: Problem>(
    p: &P,
    cfg: &BenchConfig,
    hash: &str,
    index: usize,
    cap: DepthCap,
    out: &Path,
) -> Result<(), BenchError> {
    let start = Instant::now();
    let tree = build_tree(p, cfg, index, cap)?;
    let text = tree.to_json(&tree_meta(hash, cfg, index, cap));
    std::fs::write(out, text).map_err(|e| BenchError::Io(format!("{}: {e}", out.display())))?;
    println!("{}", build_log::<P>(&tree));
    eprintln!("build took {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn build_log<P: Problem>(tree: &Tree<P>) -> Value {
    let frontier = tree.nodes().iter().filter(|n| n.status == Status::Frontier).count();
    let s = tree.build_stats();
    json!({
        "m": tree.sample_size(),
        "depth_cap": tree.depth_cap(),
        "nodes": tree.nodes().len(),
        "terminal": tree.terminal_count(),
        "frontier": frontier,
        "max_depth": tree.max_depth(),
        "interference_calls": s.interference_calls,
        "max_pieces": s.max_pieces,
        "samples_outside": s.samples_outside,
    })
}

/// Load a tree and confirm it was built for this app instance.
fn load_tree<P: Problem>(path: &Path, hash: &str, cfg: &BenchConfig) -> Result<(Tree<P>, usize, DepthCap), BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    let (tree, meta) = OddsOnTree::from_json(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let field = |k: &str| meta.get(k).and_then(Value::as_str).unwrap_or_default().to_owned();
    if field("app") != P::KIND.to_string() || field("app_hash") != hash {
        return Err(BenchError::Config(format!(
            "{} was built for a different app instance (hash {:?}, expected {hash:?})",
            path.display(),
            field("app_hash")
        )));
    }
    let (index, cap) = select_pair(cfg, Some(&field("distribution")), Some(&field("depth_cap_mode")))?;
    Ok((tree, index, cap))
}

fn cmd_bench<P: Problem>(
    p: &P,
    cfg: &BenchConfig,
    hash: &str,
    tree: Option<&Path>,
    opts: &RunOptions,
    out: &Path,
) -> Result<(), BenchError> {
    let mut jobs: Vec<(usize, DepthCap, Option<Tree<P>>)> = Vec::new();
    match tree {
        Some(path) => {
            let (t, index, cap) = load_tree::<P>(path, hash, cfg)?;
            jobs.push((index, cap, Some(t)));
        }
        None => {
            for index in 0..cfg.distributions.as_slice().len() {
                for &cap in cfg.depth_caps.as_slice() {
                    jobs.push((index, cap, None));
                }
            }
        }
    }
    let mut mismatches = 0;
    for (index, cap, tree) in jobs {
        let start = Instant::now();
        let outcome = run_pair(p, cfg, index, cap, tree, opts)?;
        append_row(out, &outcome.row)?;
        append_sidecar(&sidecar_path(out), &outcome.sidecar)?;
        let r = &outcome.row;
        println!(
            "{} {} {} {}: mean_visits={} fallback_rate={} leaf_entropy_bits={} answer_entropy_bits={} mean_backup_ops={}",
            r.app, r.mode, r.distribution, r.depth_cap_mode, r.mean_visits, r.fallback_rate,
            r.leaf_entropy_bits, r.answer_entropy_bits, r.mean_backup_ops
        );
        eprintln!("{} {}: {:.3} s", r.distribution, r.depth_cap_mode, start.elapsed().as_secs_f64());
        if outcome.cost.mismatches > 0 {
            eprintln!("mismatches: {}", outcome.cost.mismatch_examples.join("; "));
        }
        mismatches += outcome.cost.mismatches;
    }
    if mismatches > 0 {
        return Err(BenchError::Invariant(format!("{mismatches} answers differ from the reference")));
    }
    Ok(())
}

fn cmd_check<P: Problem>(p: &P, cfg: &BenchConfig, hash: &str, tree: Option<&Path>) -> Result<(), BenchError> {
    let mut jobs: Vec<(usize, DepthCap, Tree<P>)> = Vec::new();
    match tree {
        Some(path) => {
            let (t, index, cap) = load_tree::<P>(path, hash, cfg)?;
            jobs.push((index, cap, t));
        }
        None => {
            for index in 0..cfg.distributions.as_slice().len() {
                for &cap in cfg.depth_caps.as_slice() {
                    jobs.push((index, cap, build_tree(p, cfg, index, cap)?));
                }
            }
        }
    }
    let opts = CheckOptions {
        frequency_samples: cfg.entropy_samples,
        ..CheckOptions::default()
    };
    let mut failed = Vec::new();
    for (index, cap, tree) in jobs {
        let dist = distribution_for::<P>(cfg, index)?;
        let id = &cfg.distributions.as_slice()[index].id;
        let report = check_tree(p, &tree, &dist, &opts);
        for line in &report.lines {
            println!("{id} {} {line}", cap_label(cap));
            if !line.passed {
                failed.push(format!("{id} {}: {}", cap_label(cap), line.detail));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(BenchError::Invariant(format!("{} check(s) failed: {}", failed.len(), failed.join(" | "))))
    }
}

fn cmd_report(csv: &Path) -> Result<(), BenchError> {
    let rows = read_rows(csv)?;
    println!("app,mode,distribution,depth_cap_mode,mean_visits,cost_bound,within_bound,answer_entropy_bits,leaf_entropy_bits,dominated");
    for r in &rows {
        println!(
            "{},{},{},{},{:.4},{:.4},{},{:.4},{:.4},{}",
            r.app,
            r.mode,
            r.distribution,
            r.depth_cap_mode,
            r.mean_visits,
            r.cost_bound(),
            r.within_cost_bound(),
            r.answer_entropy_bits,
            r.leaf_entropy_bits,
            r.entropy_dominated()
        );
    }
    eprintln!("{} rows; entropies in bits (base 2)", rows.len());
    Ok(())
}
