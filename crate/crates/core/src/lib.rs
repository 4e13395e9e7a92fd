//! Odds-on trees: small distribution-aware filters in front of
//! `O(log n)` geometric search structures.

pub mod geometry;
pub mod partition;
pub mod entropy;
pub mod tree;
pub mod apps;
pub mod distributions;
