use thiserror::Error;

/// Errors raised by the geometry, the solver and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    DomainError(String),

    /// A principal angle reached pi/2 within tolerance; the minimizing geodesic is not unique.
    #[error("cut locus: {0}")]
    CutLocus(String),

    /// Same as [`Error::CutLocus`], tagged with the index of the offending datum or column.
    #[error("cut locus at index {index}: {reason}")]
    CutLocusAt { index: usize, reason: String },

    #[error("search direction is not a descent direction (slope = {slope:e})")]
    NotDescentDirection { slope: f64 },

    #[error("line search failed after {halvings} step reductions")]
    LineSearchFailed { halvings: usize },

    #[error("second derivative too small for a Newton step ({curvature:e})")]
    DegenerateCurvature { curvature: f64 },

    #[error("ill-conditioned matrix: {0}")]
    IllConditioned(String),

    #[error("degenerate average: {0}")]
    DegenerateAverage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for both cut-locus variants.
    pub fn is_cut_locus(&self) -> bool {
        matches!(self, Error::CutLocus(_) | Error::CutLocusAt { .. })
    }

    /// Attach a datum/column index to a cut-locus error; other errors pass through.
    pub fn at_index(self, index: usize) -> Self {
        match self {
            Error::CutLocus(reason) => Error::CutLocusAt { index, reason },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
