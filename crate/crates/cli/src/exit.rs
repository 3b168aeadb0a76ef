//! Process exit codes.

use thiserror::Error;
use wedgeflow::WedgeError;

use crate::config::ConfigError;

pub const EXIT_OK: u8 = 0;
/// A check ran and failed.
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_NOT_SUM: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_UNSTABLE: u8 = 4;
pub const EXIT_NUMERICAL: u8 = 5;
/// Bad command line, unreadable or invalid configuration (`EX_USAGE`).
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Wedge(#[from] WedgeError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Wedge(e) => wedge_exit_code(e),
        }
    }
}

pub fn wedge_exit_code(e: &WedgeError) -> u8 {
    use WedgeError::*;
    match e {
        NotSumOfExponentials { .. } | NoClosure { .. } => EXIT_NOT_SUM,
        DegenerateDrift(_) | DegeneratePair(_) => EXIT_DEGENERATE,
        Unstable { .. } => EXIT_UNSTABLE,
        NumericalBlowup(_) | NonIntegrable(_) | InvalidDensity(_) | Inconsistency(_) => {
            EXIT_NUMERICAL
        }
        AngleOutOfRange { .. }
        | DegeneratePushing { .. }
        | ZeroDrift
        | Domain(_)
        | EvaluationAtNode { .. }
        | OutsideDualCone(..) => EXIT_USAGE,
    }
}
