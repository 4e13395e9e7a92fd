//! Seeded query distributions and plug-in answer entropy.

use crate::entropy::entropy_from_counts;
use crate::geometry::{BoxN, Point};
use crate::tree::{Answer, BackupOracle, SamplingError, SamplingOracle};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Re-draw budget for truncated Gaussian components.
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("expected {expected} coordinates, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("weights must be non-negative and sum to 1, they sum to {0}")]
    Weights(f64),
    #[error("sigma must be positive and finite, found {0}")]
    Sigma(f64),
    #[error("radius must be positive and finite, found {0}")]
    Radius(f64),
    #[error("bounds must be finite with lo <= hi")]
    Bounds,
    #[error("mixture needs at least one component")]
    NoComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Dimension-free description of a distribution, as read from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Isotropic Gaussians truncated to `bounds` by re-drawing.
    GaussianMixture {
        components: Vec<GaussianSpec>,
        bounds: (Vec<f64>, Vec<f64>),
    },
    AtomsPlusNoise {
        atoms: Vec<AtomSpec>,
        noise_weight: f64,
        noise_bounds: (Vec<f64>, Vec<f64>),
    },
    /// Mass `focus_mass` uniform in a ball, the rest uniform in a box.
    RegionFocused {
        focus_center: Vec<f64>,
        focus_radius: f64,
        focus_mass: f64,
        background_bounds: (Vec<f64>, Vec<f64>),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind<const D: usize> {
    UniformBox(BoxN<D>),
    GaussianMixture {
        means: Vec<Point<D>>,
        sigmas: Vec<f64>,
        weights: Vec<f64>,
        bounds: BoxN<D>,
    },
    AtomsPlusNoise {
        atoms: Vec<Point<D>>,
        /// Atom weights followed by the noise weight.
        weights: Vec<f64>,
        noise: BoxN<D>,
    },
    RegionFocused {
        center: Point<D>,
        radius: f64,
        mass: f64,
        background: BoxN<D>,
    },
}

/// A validated distribution over `R^D` with its own root seed.
#[derive(Debug, Clone)]
pub struct QueryDistribution<const D: usize> {
    kind: Kind<D>,
    chooser: Option<WeightedIndex<f64>>,
    seed: u64,
}

fn coords<const D: usize>(v: &[f64]) -> Result<[f64; D], DistributionError> {
    <[f64; D]>::try_from(v).map_err(|_| DistributionError::Dimension {
        expected: D,
        found: v.len(),
    })
}

fn finite_box<const D: usize>(lo: &[f64], hi: &[f64]) -> Result<BoxN<D>, DistributionError> {
    let b = BoxN::new(coords(lo)?, coords(hi)?).map_err(|_| DistributionError::Bounds)?;
    if b.lo.iter().chain(&b.hi).all(|x| x.is_finite()) {
        Ok(b)
    } else {
        Err(DistributionError::Bounds)
    }
}

fn check_weights(w: &[f64]) -> Result<(), DistributionError> {
    let sum: f64 = w.iter().sum();
    if w.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(DistributionError::Weights(sum));
    }
    Ok(())
}

fn uniform_in<const D: usize, R: Rng + ?Sized>(b: &BoxN<D>, rng: &mut R) -> Point<D> {
    let mut c = [0.0; D];
    for (i, x) in c.iter_mut().enumerate() {
        *x = b.lo[i] + rng.random::<f64>() * (b.hi[i] - b.lo[i]);
    }
    Point(c)
}

impl<const D: usize> QueryDistribution<D> {
    pub fn new(kind: Kind<D>, seed: u64) -> Result<Self, DistributionError> {
        let weights = match &kind {
            Kind::UniformBox(b) => {
                finite_box::<D>(&b.lo, &b.hi)?;
                None
            }
            Kind::GaussianMixture { means, sigmas, weights, bounds } => {
                if means.is_empty() {
                    return Err(DistributionError::NoComponents);
                }
                if sigmas.len() != means.len() || weights.len() != means.len() {
                    return Err(DistributionError::Dimension {
                        expected: means.len(),
                        found: sigmas.len().min(weights.len()),
                    });
                }
                if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                    return Err(DistributionError::Sigma(*s));
                }
                finite_box::<D>(&bounds.lo, &bounds.hi)?;
                Some(weights.clone())
            }
            Kind::AtomsPlusNoise { atoms, weights, noise } => {
                if weights.len() != atoms.len() + 1 {
                    return Err(DistributionError::Dimension {
                        expected: atoms.len() + 1,
                        found: weights.len(),
                    });
                }
                finite_box::<D>(&noise.lo, &noise.hi)?;
                Some(weights.clone())
            }
            Kind::RegionFocused { radius, mass, background, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(DistributionError::Radius(*radius));
                }
                check_weights(&[*mass, 1.0 - mass])?;
                finite_box::<D>(&background.lo, &background.hi)?;
                None
            }
        };
        let chooser = match weights {
            Some(w) => {
                check_weights(&w)?;
                Some(WeightedIndex::new(&w).map_err(|_| DistributionError::Weights(w.iter().sum()))?)
            }
            None => None,
        };
        Ok(QueryDistribution { kind, chooser, seed })
    }

    pub fn from_spec(spec: &DistributionSpec, seed: u64) -> Result<Self, DistributionError> {
        let kind = match spec {
            DistributionSpec::UniformBox { lo, hi } => Kind::UniformBox(finite_box(lo, hi)?),
            DistributionSpec::GaussianMixture { components, bounds } => Kind::GaussianMixture {
                means: components
                    .iter()
                    .map(|c| coords(&c.mean).map(Point))
                    .collect::<Result<_, _>>()?,
                sigmas: components.iter().map(|c| c.sigma).collect(),
                weights: components.iter().map(|c| c.weight).collect(),
                bounds: finite_box(&bounds.0, &bounds.1)?,
            },
            DistributionSpec::AtomsPlusNoise { atoms, noise_weight, noise_bounds } => Kind::AtomsPlusNoise {
                atoms: atoms
                    .iter()
                    .map(|a| coords(&a.point).map(Point))
                    .collect::<Result<_, _>>()?,
                weights: atoms.iter().map(|a| a.weight).chain([*noise_weight]).collect(),
                noise: finite_box(&noise_bounds.0, &noise_bounds.1)?,
            },
            DistributionSpec::RegionFocused {
                focus_center,
                focus_radius,
                focus_mass,
                background_bounds,
            } => Kind::RegionFocused {
                center: Point(coords(focus_center)?),
                radius: *focus_radius,
                mass: *focus_mass,
                background: finite_box(&background_bounds.0, &background_bounds.1)?,
            },
        };
        Self::new(kind, seed)
    }

    pub fn kind(&self) -> &Kind<D> {
        &self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator number `stream` derived from the root seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// One i.i.d. draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point<D>, SamplingError> {
        match &self.kind {
            Kind::UniformBox(b) => Ok(uniform_in(b, rng)),
            Kind::GaussianMixture { means, sigmas, bounds, .. } => {
                let i = self.choose(rng);
                for _ in 0..MAX_REDRAWS {
                    let mut c = means[i].0;
                    for x in &mut c {
                        *x += sigmas[i] * rng.sample::<f64, _>(StandardNormal);
                    }
                    let p = Point(c);
                    if bounds.contains(&p) {
                        return Ok(p);
                    }
                }
                Err(SamplingError(format!(
                    "gaussian component {i} produced no point inside the bounds in {MAX_REDRAWS} draws"
                )))
            }
            Kind::AtomsPlusNoise { atoms, noise, .. } => {
                let i = self.choose(rng);
                Ok(atoms.get(i).copied().unwrap_or_else(|| uniform_in(noise, rng)))
            }
            Kind::RegionFocused { center, radius, mass, background } => {
                if rng.random::<f64>() < *mass {
                    Ok(uniform_in_ball(center, *radius, rng))
                } else {
                    Ok(uniform_in(background, rng))
                }
            }
        }
    }

    fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.chooser.as_ref().map_or(0, |w| w.sample(rng))
    }
}

fn uniform_in_ball<const D: usize, R: Rng + ?Sized>(c: &Point<D>, r: f64, rng: &mut R) -> Point<D> {
    loop {
        let mut dir = [0.0; D];
        for x in &mut dir {
            *x = rng.sample(StandardNormal);
        }
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let scale = r * rng.random::<f64>().powf(1.0 / D as f64) / norm;
        let mut p = c.0;
        for (x, d) in p.iter_mut().zip(dir) {
            *x += scale * d;
        }
        return Point(p);
    }
}

impl<const D: usize> SamplingOracle for QueryDistribution<D> {
    type Point = Point<D>;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point<D>, SamplingError> {
        self.sample(rng)
    }
}

/// Per-answer counts of `n` draws.
pub fn answer_counts<S, B, R>(dist: &S, answerer: &B, n: usize, rng: &mut R) -> Result<BTreeMap<B::Answer, u64>, SamplingError>
where
    S: SamplingOracle + ?Sized,
    B: BackupOracle<Point = S::Point> + ?Sized,
    B::Answer: Answer,
    R: Rng + ?Sized,
{
    let mut counts = BTreeMap::new();
    for _ in 0..n {
        let q = dist.draw(rng)?;
        *counts.entry(answerer.answer(&q)).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Plug-in entropy in bits of the answer distribution over `n` draws.
pub fn answer_entropy<S, B, R>(dist: &S, answerer: &B, n: usize, rng: &mut R) -> Result<f64, SamplingError>
where
    S: SamplingOracle + ?Sized,
    B: BackupOracle<Point = S::Point> + ?Sized,
    B::Answer: Answer,
    R: Rng + ?Sized,
{
    let counts = answer_counts(dist, answerer, n.max(1), rng)?;
    Ok(entropy_from_counts(counts.into_values()).unwrap_or(0.0))
}
