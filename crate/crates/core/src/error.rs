use thiserror::Error;

/// Side on which a corner equilibrium sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerDirection {
    /// Advantage positive everywhere: every signal recommends risky (cutoff at -inf).
    AllRisky,
    /// Advantage negative everywhere: every signal recommends safe (cutoff at +inf).
    AllSafe,
}

impl std::fmt::Display for CornerDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CornerDirection::AllRisky => f.write_str("all-risky (cutoff -inf)"),
            CornerDirection::AllSafe => f.write_str("all-safe (cutoff +inf)"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("success probability at cutoff {cutoff} is below 1e-12; bonus back-out is undefined")]
    DegenerateSuccessProb { cutoff: f64 },

    #[error("no interior equilibrium: {direction}")]
    NoInteriorEquilibrium { direction: CornerDirection },

    #[error("root refinement did not converge after {iterations} iterations (last x = {last})")]
    NonConvergence { iterations: usize, last: f64 },

    #[error("re-solve did not recover cutoff {target} (canonical cutoff {recovered})")]
    RoundTrip { target: f64, recovered: f64 },

    #[error("sensitivity requested at a corner equilibrium ({direction})")]
    SensitivityAtCorner { direction: CornerDirection },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_open_unit(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must lie in (0, 1), got {value}"),
        ))
    }
}

pub(crate) fn check_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite, got {value}"),
        ))
    }
}
