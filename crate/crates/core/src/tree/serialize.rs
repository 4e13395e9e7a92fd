//! Versioned JSON encoding of a built tree.
//!
//! Region coefficients are written as decimal strings using the shortest
//! round-trip representation, so decoding reproduces every `f64` exactly.
//! Only the deltas are stored; each `poly` is recomputed on load by the same
//! intersection sequence used during construction.

use super::{BuildStats, Label, Node, OddsOnConfig, OddsOnTree, Status, ROOT};
use crate::geometry::{BoxN, ConvexRegion, HalfPlane, Region};
use crate::tree::Answer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const FORMAT_NAME: &str = "oddson-tree";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("malformed tree document: {0}")]
    Malformed(String),
    #[error("unsupported format {name:?} version {version}")]
    Version { name: String, version: u64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn malformed<T>(msg: impl Into<String>) -> Result<T, CodecError> {
    Err(CodecError::Malformed(msg.into()))
}

fn num(x: f64) -> Value {
    Value::String(x.to_string())
}

fn parse_num(v: &Value) -> Result<f64, CodecError> {
    match v.as_str().map(str::parse::<f64>) {
        Some(Ok(x)) if !x.is_nan() => Ok(x),
        _ => malformed(format!("expected a decimal string, found {v}")),
    }
}

/// Regions that can be stored in a tree document.
pub trait RegionCodec: Region + Sized {
    fn encode(&self) -> Value;
    fn decode(v: &Value) -> Result<Self, CodecError>;
}

impl RegionCodec for ConvexRegion {
    fn encode(&self) -> Value {
        let hs: Vec<Value> = self
            .constraints()
            .iter()
            .map(|h| {
                let [a, b] = h.normal();
                json!([num(a), num(b), num(h.offset())])
            })
            .collect();
        json!({ "halfplanes": hs })
    }

    fn decode(v: &Value) -> Result<Self, CodecError> {
        let Some(hs) = v.get("halfplanes").and_then(Value::as_array) else {
            return malformed("region without halfplanes");
        };
        let mut out = Vec::with_capacity(hs.len());
        for h in hs {
            match h.as_array().map(Vec::as_slice) {
                Some([a, b, c]) => {
                    let h = HalfPlane::new([parse_num(a)?, parse_num(b)?], parse_num(c)?)
                        .map_err(|e| CodecError::Malformed(e.to_string()))?;
                    out.push(h);
                }
                _ => return malformed("halfplane must have three coefficients"),
            }
        }
        Ok(ConvexRegion::unbounded(out))
    }
}

impl<const D: usize> RegionCodec for BoxN<D> {
    fn encode(&self) -> Value {
        json!({
            "lo": self.lo.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "hi": self.hi.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        })
    }

    fn decode(v: &Value) -> Result<Self, CodecError> {
        let side = |key: &str| -> Result<[f64; D], CodecError> {
            let Some(xs) = v.get(key).and_then(Value::as_array) else {
                return malformed(format!("box without {key}"));
            };
            if xs.len() != D {
                return malformed(format!("box {key} must have {D} entries"));
            }
            let mut out = [0.0; D];
            for (o, x) in out.iter_mut().zip(xs) {
                *o = parse_num(x)?;
            }
            Ok(out)
        };
        Ok(BoxN {
            lo: side("lo")?,
            hi: side("hi")?,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "label")]
enum StoredStatus<A> {
    Terminal(Label<A>),
    Frontier,
    Internal,
}

#[derive(Serialize, Deserialize)]
struct StoredNode<A> {
    parent: Option<usize>,
    depth: usize,
    delta: Option<Value>,
    status: StoredStatus<A>,
}

#[derive(Serialize, Deserialize)]
struct Document<A> {
    format: String,
    version: u64,
    config: OddsOnConfig,
    sample_size: usize,
    depth_cap: usize,
    arity: usize,
    build_stats: BuildStats,
    meta: Value,
    nodes: Vec<StoredNode<A>>,
}

impl<R: RegionCodec, A: Answer> OddsOnTree<R, A> {
    /// Encode the tree with caller-supplied metadata. Output is deterministic.
    pub fn to_json(&self, meta: &Value) -> String {
        let nodes = self
            .nodes
            .iter()
            .map(|n| StoredNode {
                parent: n.parent,
                depth: n.depth,
                delta: n.parent.map(|_| n.delta.encode()),
                status: match &n.status {
                    Status::Terminal(l) => StoredStatus::Terminal(l.clone()),
                    Status::Frontier => StoredStatus::Frontier,
                    Status::Internal(_) => StoredStatus::Internal,
                },
            })
            .collect();
        let doc = Document {
            format: FORMAT_NAME.to_owned(),
            version: FORMAT_VERSION as u64,
            config: self.config.clone(),
            sample_size: self.sample_size,
            depth_cap: self.depth_cap,
            arity: self.arity,
            build_stats: self.build_stats,
            meta: meta.clone(),
            nodes,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("tree documents always serialise");
        s.push('\n');
        s
    }

    /// Decode a document written by [`OddsOnTree::to_json`], returning the
    /// tree and its metadata.
    pub fn from_json(text: &str) -> Result<(Self, Value), CodecError> {
        let doc: Document<A> = serde_json::from_str(text)?;
        if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION as u64 {
            return Err(CodecError::Version {
                name: doc.format,
                version: doc.version,
            });
        }
        let (lo, hi) = doc.config.working_box;
        let mut nodes: Vec<Node<R, A>> = Vec::with_capacity(doc.nodes.len());
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); doc.nodes.len()];
        for (id, sn) in doc.nodes.into_iter().enumerate() {
            let (delta, poly) = match (sn.parent, sn.delta) {
                (None, None) if id == ROOT => {
                    let w = R::working(lo, hi);
                    (w.clone(), w)
                }
                (Some(p), Some(d)) if p < id => {
                    if sn.depth != nodes[p].depth + 1 {
                        return malformed(format!("node {id} has inconsistent depth"));
                    }
                    children[p].push(id);
                    let delta = R::decode(&d)?;
                    (delta.clone(), nodes[p].poly.intersect(&delta))
                }
                _ => return malformed(format!("node {id} has an invalid parent or delta")),
            };
            let status = match sn.status {
                StoredStatus::Terminal(l) => Status::Terminal(l),
                StoredStatus::Frontier => Status::Frontier,
                StoredStatus::Internal => Status::Internal(Vec::new()),
            };
            nodes.push(Node {
                delta,
                poly,
                depth: sn.depth,
                parent: sn.parent,
                status,
            });
        }
        if nodes.is_empty() {
            return malformed("tree has no nodes");
        }
        for (id, (node, kids)) in nodes.iter_mut().zip(children).enumerate() {
            match &mut node.status {
                Status::Internal(c) if !kids.is_empty() => *c = kids,
                Status::Internal(_) => return malformed(format!("internal node {id} has no children")),
                _ if !kids.is_empty() => return malformed(format!("leaf {id} has children")),
                _ => {}
            }
        }
        let tree = OddsOnTree {
            config: doc.config,
            sample_size: doc.sample_size,
            depth_cap: doc.depth_cap,
            arity: doc.arity,
            nodes,
            build_stats: doc.build_stats,
        };
        Ok((tree, doc.meta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Box4, Point, Point2};
    use crate::partition::{KdRule, Model, TwoLineRule};
    use crate::tree::{InterferenceOracle, SamplingError, SamplingOracle, Verdict};
    use rand::Rng;

    struct Square;

    impl SamplingOracle for Square {
        type Point = Point2;
        fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> Result<Point2, SamplingError> {
            Ok(Point2::xy(rng.random::<f64>() * 3.0 - 1.0, rng.random::<f64>() / 3.0))
        }
    }

    struct RightOfZero;

    impl InterferenceOracle<ConvexRegion> for RightOfZero {
        type Answer = u32;
        fn classify(&self, r: &ConvexRegion) -> Verdict<u32> {
            match r.vertices() {
                Some(v) if v.iter().all(|p| p.x() > 0.1) => Verdict::Uniform(7),
                _ => Verdict::Mixed,
            }
        }
    }

    struct Hypercube;

    impl SamplingOracle for Hypercube {
        type Point = Point<4>;
        fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> Result<Point<4>, SamplingError> {
            Ok(Point([(); 4].map(|_| rng.random::<f64>())))
        }
    }

    #[test]
    fn planar_round_trip_is_lossless() {
        let mut c = OddsOnConfig::new(2000, 1.0, Model::Linear2d);
        c.working_box = (-2.0, 2.0);
        let t = OddsOnTree::build(c, &Square, &RightOfZero, &TwoLineRule).unwrap();
        let meta = json!({"app": "test"});
        let text = t.to_json(&meta);
        let (back, m) = OddsOnTree::<ConvexRegion, u32>::from_json(&text).unwrap();
        assert_eq!(m, meta);
        assert_eq!(back, t);
        assert_eq!(back.to_json(&meta), text);
    }

    #[test]
    fn box_round_trip_keeps_infinities() {
        let mut c = OddsOnConfig::new(300, 1.0, Model::Comparison);
        c.working_box = (0.0, 1.0);
        let t = OddsOnTree::<Box4, u32>::build(c, &Hypercube, &crate::tree::NeverUniform::default(), &KdRule::<4>)
            .unwrap();
        let text = t.to_json(&Value::Null);
        let (back, _) = OddsOnTree::<Box4, u32>::from_json(&text).unwrap();
        assert_eq!(back, t);
        assert!(text.contains("\"inf\"") && text.contains("\"-inf\""));
    }

    #[test]
    fn rejects_foreign_documents() {
        let r = OddsOnTree::<Box4, u32>::from_json(r#"{"format":"x","version":1}"#);
        assert!(r.is_err());
        let mut c = OddsOnConfig::new(50, 1.0, Model::Comparison);
        c.working_box = (0.0, 1.0);
        let t = OddsOnTree::<Box4, u32>::build(c, &Hypercube, &crate::tree::NeverUniform::default(), &KdRule::<4>)
            .unwrap();
        let text = t.to_json(&Value::Null).replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            OddsOnTree::<Box4, u32>::from_json(&text),
            Err(CodecError::Version { version: 9, .. })
        ));
    }

    #[test]
    fn decimal_strings_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, f64::INFINITY, f64::NEG_INFINITY, 1e300] {
            assert_eq!(parse_num(&num(x)).unwrap(), x);
        }
        assert!(parse_num(&Value::String("NaN".into())).is_err());
    }
}
