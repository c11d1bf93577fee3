use thiserror::Error;

/// Errors shared by every module in this crate.
///
/// `CapExceeded` and `NonConvergence` are split out because callers map them
/// to distinct process exit codes; everything else is an input problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subgraph spec: {0}")]
    InvalidSubgraph(String),

    #[error("invalid model spec: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("schedule table has no entry for n = {0}")]
    TableMiss(f64),

    #[error("n = {n} exceeds the cap {cap} for {what}")]
    CapExceeded { n: u64, cap: u64, what: &'static str },

    #[error("solver failed to converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
