use thiserror::Error;

pub type Result<T> = std::result::Result<T, WedgeError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WedgeError {
    #[error("angle {name} = {value} is outside the open interval (0, pi)")]
    AngleOutOfRange { name: &'static str, value: f64 },

    #[error("degenerate pushing direction: sin({name}) = {sine:e} is below 1e-12")]
    DegeneratePushing { name: &'static str, sine: f64 },

    #[error("drift vector must be nonzero and finite")]
    ZeroDrift,

    #[error(
        "no finite sum-of-exponentials density exists: alpha = {alpha} is not a nonpositive integer"
    )]
    NotSumOfExponentials { alpha: f64 },

    #[error("degenerate drift: {0}")]
    DegenerateDrift(String),

    #[error(
        "no stationary distribution: drift angle {theta_mu} is outside the stability interval ({lo}, {hi})"
    )]
    Unstable { theta_mu: f64, lo: f64, hi: f64 },

    #[error("density is not integrable over the wedge: {0}")]
    NonIntegrable(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),

    #[error("requested angle {theta} is a node of the leading corner term")]
    EvaluationAtNode { theta: f64 },

    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    #[error("lambda = ({0}, {1}) is not in the dual cone of the wedge")]
    OutsideDualCone(f64, f64),

    #[error("mating path did not close within {steps} vertices")]
    NoClosure { steps: usize },

    #[error("inconsistent result: {0}")]
    Inconsistency(String),

    #[error("domain error: {0}")]
    Domain(String),
}
