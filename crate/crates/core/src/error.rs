use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset needs at least 2 instances, got {0}")]
    TooFewInstances(usize),

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("percentile must lie in (0.5, 1), got {0}")]
    InvalidPercentile(f64),

    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("sensitivity must be positive, got {0}")]
    InvalidSensitivity(f64),

    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),

    #[error("normalization params disagree with data extremes: params ({params_min}, {params_max}) vs data ({data_min}, {data_max})")]
    ExtremesMismatch {
        params_min: f64,
        params_max: f64,
        data_min: f64,
        data_max: f64,
    },

    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("action set is empty")]
    EmptyActionSet,

    #[error("assignment length {got} does not match instance count {expected}")]
    AssignmentLength { expected: usize, got: usize },

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid bin interval [{lo}, {hi}] within [0, 1]")]
    InvalidBinInterval { lo: f64, hi: f64 },

    #[error("distributions have different lengths: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("distribution masses must be nonnegative and sum to 1 (sum = {sum})")]
    NotADistribution { sum: f64 },

    #[error("zero-norm distribution")]
    ZeroNorm,

    #[error("sample count must be at least 1")]
    EmptySampleRequest,

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("bin index {bin} out of range for {k} bins (instance {instance})")]
    BinOutOfRange {
        instance: usize,
        bin: usize,
        k: usize,
    },

    #[error("column {column:?} not found in CSV header")]
    MissingColumn { column: String },

    #[error("row {line}: cannot parse {value:?} in column {column:?} as a number")]
    BadNumber {
        line: usize,
        column: String,
        value: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
