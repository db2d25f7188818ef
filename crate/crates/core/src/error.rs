use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or insufficient input (empty lists, mismatched lengths, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The data do not contain the feature the fit needs.
    #[error("fit rejected: {0}")]
    FitRejected(String),

    /// An iterative solver hit its iteration cap. The best parameters found
    /// so far are attached in the solver's own parameterisation.
    #[error("no convergence after {iterations} iterations: {message}")]
    Convergence {
        message: String,
        iterations: usize,
        best: Vec<f64>,
    },

    /// More than one candidate feature; the caller has to disambiguate.
    #[error("ambiguous result, candidates: {candidates:?}")]
    Ambiguous { candidates: Vec<f64> },

    /// Peak or tone not resolvable from the floor.
    #[error("low contrast: {0}")]
    LowContrast(String),

    /// Parameter cannot be determined from the supplied data.
    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    /// Gain values outside the physically allowed region.
    #[error("inconsistent gain: {0}")]
    InconsistentGain(String),

    /// Linear response has an eigenvalue with positive real part.
    #[error("unstable operating point: {0}")]
    Unstable(String),

    /// Input text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Parsed data violate a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Tabular input does not match the requested schema.
    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::FitRejected(_) => "fit-rejected",
            Error::Convergence { .. } => "convergence",
            Error::Ambiguous { .. } => "ambiguous",
            Error::LowContrast(_) => "low-contrast",
            Error::Unidentifiable(_) => "unidentifiable",
            Error::InconsistentGain(_) => "inconsistent-gain",
            Error::Unstable(_) => "unstable",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Schema(_) => "schema",
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Parse { .. } | Error::Validation(_) | Error::Schema(_) | Error::Domain(_)
        )
    }
}
