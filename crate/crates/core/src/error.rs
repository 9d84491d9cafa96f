use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has length {len}, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum} (deviation {deviation:e} from 1)")]
    RowSumDeviation { row: usize, sum: f64, deviation: f64 },
    #[error("weight {index} = {value} is negative or not finite")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumDeviation { sum: f64 },
    #[error("map value {value} at position {index} is outside 0..{n}")]
    MapValueOutOfRange { index: usize, value: usize, n: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("horizon {requested} exceeds available length {available}")]
    HorizonExceeded { requested: usize, available: usize },
    #[error("label {label} is outside 0..{n}^{n}")]
    LabelOutOfRange { label: u64, n: usize },
    #[error("label space of size {size} exceeds cap {cap}")]
    LabelSpaceTooLarge { size: u128, cap: u128 },
    #[error("greedy decomposition did not converge: {0}")]
    NonConvergence(String),
    #[error("decomposition is invalid: {0}")]
    InvalidDecomposition(String),
    #[error("label {label} is not part of the environment alphabet")]
    LabelNotInAlphabet { label: u64 },
    #[error("minimal alphabet requires at least one decomposition")]
    MissingDecomposition,
    #[error("coupling completion failed: {0}")]
    CompletionImpossible(String),
    #[error("coupling table is invalid: {0}")]
    InvalidCoupling(String),
    #[error("environment coordinate {coordinate} is not materialized")]
    WindowUnderflow { coordinate: i64 },
    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: i64, hi: i64 },
    #[error("enumeration of {size} input sequences exceeds cap {cap}")]
    EnumerationTooLarge { size: u128, cap: u128 },
    #[error("dimension {dim} exceeds dense cap {cap}")]
    DimensionTooLarge { dim: u128, cap: u128 },
    #[error("window of {width} coordinates gives dimension {dim}, above cap {cap}")]
    WindowTooLarge { width: usize, dim: u128, cap: u128 },
    #[error("Kraus family is not unital (deviation {deviation:e})")]
    UnitalityViolation { deviation: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not a permutation matrix")]
    NotAPermutation,
    #[error("operation requires a homogeneous dilation")]
    NotHomogeneous,
    #[error("no input law defined for time {t}")]
    MissingInputLaw { t: usize },
    #[error("bad input: {0}")]
    BadInput(String),
}
