use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("transfer functions with different domains cannot be combined ({0} vs {1})")]
    MixedDomain(String, String),

    #[error("evaluation at a pole: z = {0}")]
    PoleEvaluation(Complex64),

    #[error("degenerate loop: 1 + L is identically zero")]
    DegenerateLoop,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("ill-posed Bode integral: {0}")]
    IllPosedIntegral(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}
