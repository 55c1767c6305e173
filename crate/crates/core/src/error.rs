use std::fmt;

use thiserror::Error;

/// Which stability hypothesis a profile/headway pair fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hypothesis {
    /// `M * T >= 1`.
    LipschitzBound { lipschitz: f64, headway: f64 },
    /// `inf v_d <= 0`.
    PositiveInfimum { infimum: f64 },
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::LipschitzBound { lipschitz, headway } => write!(
                f,
                "Lipschitz bound violated: M*T = {lipschitz}*{headway} = {} >= 1",
                lipschitz * headway
            ),
            Hypothesis::PositiveInfimum { infimum } => {
                write!(f, "profile infimum {infimum} is not positive")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum PlatoonError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violation: {0}")]
    Hypothesis(Hypothesis),

    #[error("vehicle index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{what} did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_step: f64,
    },

    #[error("numeric blow-up at t = {t}: vehicle {vehicle} has a non-finite state")]
    NumericBlowUp { t: f64, vehicle: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PlatoonError> = std::result::Result<T, E>;
