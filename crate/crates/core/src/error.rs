use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("paths live on different grids or dimensions")]
    GridMismatch,

    #[error("partition point {0} is not a point of the simulation grid")]
    PartitionNotOnGrid(f64),

    #[error("partition is not balanced: mesh/min cell = {ratio} exceeds cap {cap}")]
    Unbalanced { ratio: f64, cap: f64 },

    #[error("functional `{0}` has no vertical derivative")]
    MissingDerivative(String),

    #[error("functional `{0}` has no horizontal derivative")]
    NotHorizontallyDifferentiable(String),

    #[error("no convergence after {iterations} iterations (last distance {last_distance:e})")]
    NotConverged {
        iterations: usize,
        last_distance: f64,
    },

    #[error("growth violation: state norm {norm:e} at t = {time}")]
    Divergence { time: f64, norm: f64 },

    #[error("non-finite value at t = {0}")]
    NonFinite(f64),

    #[error("sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::OutOfRange {
            what,
            value,
            range: format!("[{lo}, {hi}]"),
        }
    }
}
