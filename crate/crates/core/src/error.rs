use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration field is out of its admissible range.
    #[error("invalid `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("binomial coefficient C({n}, {k}) overflows")]
    Overflow { n: u64, k: u64 },

    #[error("rank {rank} out of range (limit {limit})")]
    RankOutOfRange { rank: u128, limit: u128 },

    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),

    #[error("key stream exhausted: needed {needed} bits, {available} left")]
    KeyExhausted { needed: u32, available: usize },

    #[error("unsupported constellation size M = {0}")]
    UnsupportedConstellation(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("estimation error variance {err_var} must be below {limit}")]
    EstimationVariance { err_var: f64, limit: f64 },

    #[error("argument outside the MGF domain: 1 + xi - t * nlos_var = {0}")]
    MgfDomain(f64),

    #[error("candidate space too large: {candidates} symbol vectors (limit {limit})")]
    CandidateSpace { candidates: u128, limit: u128 },

    #[error("jam configuration space too large: {0}")]
    JamSpace(u128),
}
