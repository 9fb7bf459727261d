use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension-mismatch: expected {expected}x{expected} matrix for n = {n}, found {found}")]
    DimensionMismatch { n: usize, expected: usize, found: String },

    #[error("negative-entry: tpm[{row}][{col}] = {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite-entry: tpm[{row}][{col}]")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("row-not-stochastic: row {row} sums to {sum}")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("unknown-convention: {0:?} (expected \"little-endian\")")]
    UnknownConvention(String),

    #[error("label-count: {found} labels for {n} elements")]
    LabelCount { n: usize, found: usize },

    #[error("mask-out-of-range: mask {mask:#b} exceeds {n} elements")]
    MaskOutOfRange { mask: u32, n: usize },

    #[error("state-out-of-range: state {index} exceeds {n} elements")]
    StateOutOfRange { index: u32, n: usize },

    #[error("too-many-elements: {n} elements exceeds the limit of {limit}")]
    TooManyElements { n: usize, limit: usize },

    #[error("empty-subset: {0} requires a non-empty subset")]
    EmptySubset(&'static str),

    #[error("unreachable-state: mechanism state has zero likelihood under every past purview state")]
    UnreachableState,

    #[error("cut-pair-outside: link ({mechanism}, {purview}) is not in mechanism x purview")]
    CutPairOutside { mechanism: usize, purview: usize },

    #[error("not-a-partition: {0}")]
    NotAPartition(String),

    #[error("invalid-grain: {0}")]
    InvalidGrain(String),

    #[error("zero-weight-macro-state: macro state {0} has no micro weight")]
    ZeroWeightMacroState(usize),

    #[error("stationary-not-converged after {0} iterations")]
    StationaryNotConverged(usize),

    #[error("invalid-distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid-config: {0}")]
    InvalidConfig(String),

    #[error("encoder-not-total: configuration at step {step} has no encoding")]
    EncoderNotTotal { step: usize },

    #[error("negative-action: {0}")]
    NegativeAction(f64),

    #[error("invalid-state-string: {0}")]
    InvalidStateString(String),
}

pub type Result<T> = std::result::Result<T, Error>;
