use crate::BenchError;
use oddson::distributions::DistributionSpec;
use oddson::tree::DepthCap;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppKind {
    Polygon,
    Postoffice,
    Rectcount,
}

impl AppKind {
    /// Dimension of the query space.
    pub fn query_dim(self) -> usize {
        match self {
            AppKind::Polygon | AppKind::Postoffice => 2,
            AppKind::Rectcount => 4,
        }
    }
}

impl fmt::Display for AppKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AppKind::Polygon => "polygon",
            AppKind::Postoffice => "postoffice",
            AppKind::Rectcount => "rectcount",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDistribution {
    pub id: String,
    pub spec: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn as_slice(&self) -> &[T] {
        match self {
            OneOrMany::One(t) => std::slice::from_ref(t),
            OneOrMany::Many(v) => v,
        }
    }
}

fn default_caps() -> OneOrMany<DepthCap> {
    OneOrMany::One(DepthCap::default())
}

fn default_min_samples() -> usize {
    1
}

fn default_entropy_samples() -> usize {
    100_000
}

fn default_working_box() -> (f64, f64) {
    (-1e6, 1e6)
}

/// One benchmark configuration; all randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub app: AppKind,
    /// Sites, points, or polygon vertices.
    pub n: usize,
    pub tau: f64,
    #[serde(default = "default_caps", alias = "depth_cap_mode")]
    pub depth_caps: OneOrMany<DepthCap>,
    #[serde(alias = "distribution")]
    pub distributions: OneOrMany<NamedDistribution>,
    pub query_count: usize,
    pub seed: u64,
    /// CSV report path.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Input points file; generated from the seed when absent.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
    /// Draws used to estimate leaf and answer entropies and node frequencies.
    #[serde(default = "default_entropy_samples")]
    pub entropy_samples: usize,
    #[serde(default = "default_working_box")]
    pub working_box: (f64, f64),
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig =
            serde_json::from_str(text).map_err(|e| BenchError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative input paths are resolved against the config's directory.
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.n == 0 || (self.app == AppKind::Polygon && self.input.is_none() && self.n < 3) {
            return bad(format!("n = {} is too small for {}", self.n, self.app));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau = {} must lie in (0, 1]", self.tau));
        }
        if self.query_count == 0 || self.entropy_samples == 0 || self.min_samples == 0 {
            return bad("query_count, entropy_samples and min_samples must be positive".into());
        }
        let (lo, hi) = self.working_box;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("working_box must be finite with lo < hi".into());
        }
        if self.depth_caps.as_slice().is_empty() || self.distributions.as_slice().is_empty() {
            return bad("need at least one depth cap and one distribution".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in self.distributions.as_slice() {
            if d.id.is_empty() || !d.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return bad(format!("distribution id {:?} must be non-empty [A-Za-z0-9._-]", d.id));
            }
            if !seen.insert(&d.id) {
                return bad(format!("duplicate distribution id {:?}", d.id));
            }
            let r = match self.app.query_dim() {
                2 => oddson::distributions::QueryDistribution::<2>::from_spec(&d.spec, 0).map(drop),
                _ => oddson::distributions::QueryDistribution::<4>::from_spec(&d.spec, 0).map(drop),
            };
            if let Err(e) = r {
                return bad(format!("distribution {:?} for {}: {e}", d.id, self.app));
            }
        }
        Ok(())
    }

    pub fn distribution(&self, id: &str) -> Option<(usize, &NamedDistribution)> {
        self.distributions.as_slice().iter().enumerate().find(|(_, d)| d.id == id)
    }
}

/// Short label of a depth cap mode, as written in reports.
pub fn cap_label(cap: DepthCap) -> String {
    match cap {
        DepthCap::Construction => "construction".into(),
        DepthCap::Theoretical => "theoretical".into(),
        DepthCap::Practical => "practical".into(),
        DepthCap::Explicit(k) => format!("explicit:{k}"),
    }
}

pub fn parse_cap(s: &str) -> Result<DepthCap, BenchError> {
    match s {
        "construction" => Ok(DepthCap::Construction),
        "theoretical" => Ok(DepthCap::Theoretical),
        "practical" => Ok(DepthCap::Practical),
        _ => s
            .strip_prefix("explicit:")
            .and_then(|k| k.parse().ok())
            .map(DepthCap::Explicit)
            .ok_or_else(|| BenchError::Config(format!("unknown depth cap {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "app": "postoffice", "n": 100, "tau": 0.5, "query_count": 10, "seed": 1,
        "distribution": {"id": "u", "spec": {"kind": "uniform_box", "lo": [0, 0], "hi": [1, 1]}}
    }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = BenchConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.depth_caps.as_slice(), &[DepthCap::Construction]);
        assert_eq!(c.distributions.as_slice().len(), 1);
        assert_eq!(c.entropy_samples, 100_000);
        assert_eq!(c.working_box, (-1e6, 1e6));
    }

    #[test]
    fn caps_accept_lists_and_explicit() {
        let text = MINIMAL.replace("\"seed\": 1,", r#""seed": 1, "depth_caps": ["practical", {"explicit": 3}],"#);
        let c = BenchConfig::from_json(&text).unwrap();
        assert_eq!(c.depth_caps.as_slice(), &[DepthCap::Practical, DepthCap::Explicit(3)]);
        assert_eq!(cap_label(DepthCap::Explicit(3)), "explicit:3");
        assert_eq!(parse_cap("explicit:3").unwrap(), DepthCap::Explicit(3));
        assert!(parse_cap("deep").is_err());
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for (from, to) in [
            ("\"tau\": 0.5", "\"tau\": 0"),
            ("\"n\": 100", "\"n\": 0"),
            ("\"query_count\": 10", "\"query_count\": 0"),
            ("\"app\": \"postoffice\"", "\"app\": \"rectcount\""),
            ("\"id\": \"u\"", "\"id\": \"a,b\""),
            ("\"seed\": 1", "\"seed\": 1, \"colour\": 2"),
        ] {
            let e = BenchConfig::from_json(&MINIMAL.replace(from, to)).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{to}: {e}");
        }
    }
}
