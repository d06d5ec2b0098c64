use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Views disagree on the number of samples, or a matrix has the wrong shape.
    DimensionMismatch {
        expected: usize,
        found: usize,
        what: String,
    },
    NonFinite {
        view: usize,
        feature: usize,
        sample: usize,
    },
    LabelOutOfRange {
        sample: usize,
        label: usize,
        num_classes: usize,
    },
    /// Fewer than two classes, an empty view list, or a bad class split.
    InvalidSplit(String),
    InvalidConfig(String),
    /// A view has fewer features than the factorization rank.
    RankTooLarge {
        view: usize,
        dim: usize,
        rank: usize,
    },
    TooManyClusters {
        k: usize,
        n: usize,
    },
    EmptyInput(&'static str),
    InstanceTooLarge {
        size: u128,
        limit: u128,
    },
    NotOrthonormal {
        deviation: f64,
    },
    NonFiniteCost {
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, found {found}")
            }
            Error::NonFinite { view, feature, sample } => write!(
                f,
                "non-finite entry in view {view} at feature {feature}, sample {sample}"
            ),
            Error::LabelOutOfRange {
                sample,
                label,
                num_classes,
            } => write!(f, "label {label} of sample {sample} is outside [0, {num_classes})"),
            Error::InvalidSplit(msg) => write!(f, "invalid class split: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid solver configuration: {msg}"),
            Error::RankTooLarge { view, dim, rank } => write!(
                f,
                "view {view} has {dim} features but the factorization needs rank {rank}"
            ),
            Error::TooManyClusters { k, n } => {
                write!(f, "cannot form {k} clusters from {n} points")
            }
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InstanceTooLarge { size, limit } => {
                write!(f, "instance has {size} candidates, limit is {limit}")
            }
            Error::NonFiniteCost { row, col } => {
                write!(f, "cost matrix entry ({row}, {col}) is not finite")
            }
            Error::NotOrthonormal { deviation } => {
                write!(f, "candidate basis is not orthonormal (max deviation {deviation:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
