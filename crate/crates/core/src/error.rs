use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Zero total reactance between the two sources.
    #[error("singular network: {0}")]
    SingularNetwork(&'static str),

    #[error("degenerate model: {0}")]
    DegenerateModel(&'static str),

    #[error("no stable equilibrium point exists for this model")]
    NoEquilibrium,

    /// Derivative requested exactly at the matched-ratio kink.
    #[error("non-differentiable point: {0}")]
    NonDifferentiable(&'static str),

    #[error("integration diverged at t = {time} s")]
    Diverged { time: f64 },

    #[error("design infeasible: {0}")]
    DesignInfeasible(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

/// Returns an error unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, value, "must be finite and > 0"))
    }
}

/// Returns an error unless `value` is finite and non-negative.
pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, value, "must be finite and >= 0"))
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, value, "must be finite"))
    }
}
