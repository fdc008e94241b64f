use thiserror::Error;

pub type Result<T> = std::result::Result<T, DegorError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DegorError {
    /// A field or function could not be evaluated at the requested point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    /// Two critical points coincide or f″ vanishes at one of them.
    #[error("critical points are not simple: {0}")]
    NonSimpleCritical(String),

    #[error("left the Hurwitz chart: {0}")]
    ChartBoundary(String),

    #[error("{what}: {value:.3e} exceeds tolerance {tol:.1e}")]
    ToleranceExceeded { what: String, value: f64, tol: f64 },

    #[error("matrix violates the parity constraint for degree {ell}: defect {defect:.3e}")]
    ParityViolation { ell: usize, defect: f64 },

    #[error("wave jet has depth {have}, need {need}")]
    InsufficientJetDepth { need: usize, have: usize },

    #[error("flow is singular: |det| = {det:.3e}")]
    SingularFlow { det: f64 },

    #[error("finite-section value not converged: {0}")]
    TruncationUnstable(String),

    #[error("vacuum expectation vanishes: |<0|A|0>| = {0:.3e}")]
    DenominatorVanishes(f64),
}

impl DegorError {
    /// Short machine-readable tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            DegorError::Domain(_) => "domain",
            DegorError::Precondition(_) => "precondition",
            DegorError::BadDimensions(_) => "bad_dimensions",
            DegorError::NonSimpleCritical(_) => "non_simple_critical",
            DegorError::ChartBoundary(_) => "chart_boundary",
            DegorError::ToleranceExceeded { .. } => "tolerance_exceeded",
            DegorError::ParityViolation { .. } => "parity_violation",
            DegorError::InsufficientJetDepth { .. } => "insufficient_jet_depth",
            DegorError::SingularFlow { .. } => "singular_flow",
            DegorError::TruncationUnstable(_) => "truncation_unstable",
            DegorError::DenominatorVanishes(_) => "denominator_vanishes",
        }
    }
}
