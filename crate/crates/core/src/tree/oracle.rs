use rand::Rng;
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::Debug;

/// Values a query problem can return.
pub trait Answer: Clone + Ord + Debug + Send + Sync + Serialize + DeserializeOwned {}

impl<T: Clone + Ord + Debug + Send + Sync + Serialize + DeserializeOwned> Answer for T {}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sampling oracle failed: {0}")]
pub struct SamplingError(pub String);

/// Draws i.i.d. queries from the query distribution.
pub trait SamplingOracle {
    type Point;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::Point, SamplingError>;
}

/// The conventional search structure consulted when the filter cannot answer.
pub trait BackupOracle {
    type Point;
    type Answer;

    /// The answer together with the number of elementary operations spent.
    fn answer_counted(&self, q: &Self::Point) -> (Self::Answer, u64);

    fn answer(&self, q: &Self::Point) -> Self::Answer {
        self.answer_counted(q).0
    }
}

/// Outcome of an interference test on a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<A> {
    /// Every point of the region has this answer.
    Uniform(A),
    /// The region may contain two points with different answers.
    Mixed,
    /// The region has no points.
    Empty,
}

/// Decides whether a region is answer-uniform.
///
/// `Uniform` verdicts must be sound. Reporting `Mixed` for a uniform region is
/// allowed and only costs filter efficiency.
pub trait InterferenceOracle<R> {
    type Answer;

    fn classify(&self, region: &R) -> Verdict<Self::Answer>;
}

impl<R, T: InterferenceOracle<R> + ?Sized> InterferenceOracle<R> for &T {
    type Answer = T::Answer;

    fn classify(&self, region: &R) -> Verdict<T::Answer> {
        (**self).classify(region)
    }
}

impl<T: BackupOracle + ?Sized> BackupOracle for &T {
    type Point = T::Point;
    type Answer = T::Answer;

    fn answer_counted(&self, q: &T::Point) -> (T::Answer, u64) {
        (**self).answer_counted(q)
    }
}

impl<T: SamplingOracle + ?Sized> SamplingOracle for &T {
    type Point = T::Point;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T::Point, SamplingError> {
        (**self).draw(rng)
    }
}

/// Interference oracle that never certifies a region; building with it yields
/// the plain sample partition tree.
#[derive(Debug, Clone, Copy)]
pub struct NeverUniform<A>(std::marker::PhantomData<A>);

impl<A> Default for NeverUniform<A> {
    fn default() -> Self {
        NeverUniform(std::marker::PhantomData)
    }
}

impl<R, A> InterferenceOracle<R> for NeverUniform<A> {
    type Answer = A;

    fn classify(&self, _region: &R) -> Verdict<A> {
        Verdict::Mixed
    }
}
