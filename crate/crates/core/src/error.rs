use thiserror::Error;

/// Node id of the offending party, where one exists.
pub type Offender = usize;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("bandwidth violation: {0}")]
    BandwidthViolation(String),
    #[error("round cap {cap} exceeded after {rounds} rounds")]
    NonTermination { cap: u64, rounds: u64 },
    #[error("routing demand violation: node {node} would {dir} {count} messages (limit {limit})")]
    DemandViolation {
        node: Offender,
        dir: &'static str,
        count: usize,
        limit: usize,
    },
    #[error("sort arity violation: node {node} holds {count} entries, expected {expected}")]
    ArityViolation {
        node: Offender,
        count: usize,
        expected: usize,
    },
    #[error("balancing weight violation: {0}")]
    WeightViolation(String),
    #[error("output density estimate {estimate} too small: {needed} duplicate slots needed, {available} available")]
    DensityUnderestimate {
        estimate: usize,
        needed: usize,
        available: usize,
    },
    #[error("source set is empty")]
    EmptySources,
    #[error("family of node {node} has {size} members, need at least {k}")]
    FamilyTooSmall { node: Offender, size: usize, k: usize },
    #[error("hitting set misses family of node {node}")]
    HitFailure { node: Offender },
    #[error("graph has non-unit edge weights (edge {u}-{v} weight {w})")]
    WeightedInput { u: usize, v: usize, w: u64 },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
