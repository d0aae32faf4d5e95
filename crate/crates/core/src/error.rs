use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// `|tau_r| >= xi`: the pendulum has no stable equilibrium.
    #[error("loss of synchronism: |tau_r| = {tau_r} is not below xi = {xi}")]
    LossOfSynchronism { tau_r: f64, xi: f64 },

    /// The linear template only covers the underdamped case.
    #[error("not underdamped: xi*cos(delta) = {stiffness} must exceed beta^2/4 = {damping}")]
    NotUnderdamped { stiffness: f64, damping: f64 },

    /// Two time constants (or a decay rate and a time constant) coincide,
    /// so the simple-pole formulas do not apply.
    #[error("pole collision: {0}")]
    PoleCollision(String),

    /// Evaluation of a rational function exactly at one of its poles.
    #[error("evaluation at a pole: {0}")]
    Pole(String),

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("ill-conditioned matrix pencil: {0}")]
    IllConditioned(String),

    #[error("no model order up to {max_order} reached fit error {target:e} (best {best:e})")]
    OrderExhausted {
        max_order: usize,
        target: f64,
        best: f64,
    },

    #[error("unknown stage `{0}`")]
    UnknownStage(String),

    #[error("frequency grid is empty")]
    EmptyGrid,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors raised by numerics rather than by bad configuration.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter { .. } | Error::UnknownStage(_) | Error::EmptyGrid
        )
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be non-negative, got {value}")))
    }
}
