use std::fmt;

/// Errors raised while building or evaluating certificates.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value at x = {x:?}, t = {t}: {what}")]
    Numerical { x: Vec<f64>, t: f64, what: String },

    #[error("quadrature on [{a}, {b}] did not converge (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("overflow: exponent {exponent} is not representable in f64")]
    Overflow { exponent: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at t = {t} ({kind}); last good state {state:?}")]
    Integration {
        kind: IntegrationFailure,
        t: f64,
        state: Vec<f64>,
    },

    #[error("decrease check is not monotone in alpha: passes at {passes_at}, fails at {fails_at}")]
    NonMonotone { passes_at: f64, fails_at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationFailure {
    StepSizeCollapse,
    BlowUp,
    NonFinite,
    StepBudget,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IntegrationFailure::StepSizeCollapse => "step-size collapse",
            IntegrationFailure::BlowUp => "BlowUp",
            IntegrationFailure::NonFinite => "non-finite state",
            IntegrationFailure::StepBudget => "step budget exhausted",
        };
        f.write_str(s)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
