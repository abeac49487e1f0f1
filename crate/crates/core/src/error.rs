use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ambiguous preference: {0} does not hold")]
    AmbiguousPreference(String),

    #[error("coefficient {name} = {value} outside {domain}")]
    CoefficientOutOfRange {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate coefficients: alpha1 * alpha2 = 1 has no fixed point")]
    DegenerateCoefficients,

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: u64 },

    #[error("reward gap {name} = {value} is not positive")]
    NonpositiveGap { name: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model kind {0} is not supported here")]
    UnsupportedKind(String),

    #[error("singular boundary-condition system: {0}")]
    SingularSystem(String),

    #[error("initial state violates the collision ellipse (constraint value {value:.6})")]
    InfeasibleStart { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
