use thiserror::Error;

/// Errors raised by the kernels, solvers and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A quadrature or solver configuration cannot produce a meaningful result.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// The hyperprior cannot be combined with the requested expectation.
    #[error("unsupported hyperprior: {0}")]
    UnsupportedHyperprior(String),

    /// A bracketing root search started from an interval without a sign change.
    #[error("bracket failure: {0}")]
    BracketFailure(String),

    /// The fixed-point scan found no solution.
    #[error("no fixed-point solution: {0}")]
    NoSolution(String),

    /// A matrix that is positive definite by construction failed to factorize.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A precondition of a diagnostic routine is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Wraps an error with the grid coordinates where it occurred.
    #[error("at {context}: {source}")]
    At {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, context: impl Into<String>) -> Self {
        Error::At { context: context.into(), source: Box::new(self) }
    }

    /// Innermost error, with all coordinate context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for errors caused by invalid user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidDomain(_) | Error::Degenerate(_) | Error::UnsupportedHyperprior(_) | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

// Negated so that NaN fails the check.
macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        {
            let ok: bool = $cond;
            if !ok {
                return Err($crate::Error::$variant(format!($($arg)+)));
            }
        }
    };
}
pub(crate) use ensure;
