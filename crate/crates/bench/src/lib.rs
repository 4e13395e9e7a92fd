//! Harness for building, benchmarking and checking odds-on trees over the
//! bundled apps.

pub mod check;
pub mod cli;
pub mod config;
pub mod problem;
pub mod workload;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invariant(String),
}

impl BenchError {
    /// 1 for failed invariants, 2 for configuration and input problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Invariant(_) => 1,
            BenchError::Config(_) | BenchError::Io(_) => 2,
        }
    }
}
