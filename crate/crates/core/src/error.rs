use std::fmt;

/// Errors produced anywhere in the pipeline.
#[derive(Debug)]
pub enum Error {
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    InvalidProblem(String),
    InvalidArgument(String),
    /// Phase-1 objective (or the QP residual heuristic) proved the problem empty.
    Infeasible,
    MaxIterations(usize),
    DegenerateInput,
    UnsupportedDimension(usize),
    OutsideHull,
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    /// Training loss blew up past the guard or became non-finite.
    Divergence {
        epoch: usize,
        loss: f64,
    },
    /// More solver failures than a command tolerates.
    FailureBudget {
        failed: usize,
        total: usize,
    },
    Io(std::io::Error),
    Json(serde_json::Error),
    Csv(csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(
                f,
                "dimension mismatch for {what}: expected {expected}, got {got}"
            ),
            Error::InvalidProblem(msg) => write!(f, "invalid problem: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Infeasible => write!(f, "problem is infeasible"),
            Error::MaxIterations(n) => write!(f, "iteration limit reached after {n} iterations"),
            Error::DegenerateInput => {
                write!(
                    f,
                    "points are affinely dependent; cannot build a triangulation"
                )
            }
            Error::UnsupportedDimension(k) => {
                write!(
                    f,
                    "parameter dimension {k} is not supported (k must be 1, 2 or 3)"
                )
            }
            Error::OutsideHull => {
                write!(f, "query point lies outside the convex hull of the samples")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::Divergence { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch} (loss = {loss})")
            }
            Error::FailureBudget { failed, total } => {
                write!(f, "{failed} of {total} solves failed, above the 1% budget")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
            Error::Csv(e) => write!(f, "csv error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            Error::Csv(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e)
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
