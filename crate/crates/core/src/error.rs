use thiserror::Error;

/// Errors raised by the model, dynamics and stability routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitronError {
    /// An input violated its documented range.
    #[error("invalid {name}: {reason}")]
    Validation { name: &'static str, reason: String },

    /// The dipole sits at the coordinate origin, where `e_r` is undefined.
    #[error("position is at the origin; radial direction is undefined")]
    AtOrigin,

    /// The evaluation point is inside the pole guard radius.
    #[error("point is {distance:e} m from a pole, inside the guard radius {guard:e} m")]
    NearPole { distance: f64, guard: f64 },

    /// A NaN or infinity reached a public operation.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (largest asymmetry {0:e})")]
    NotSymmetric(f64),

    /// The minimum-spin bound only exists for r0/h above sqrt(2/3).
    #[error("spin bound undefined at r0/h = {ratio}; it requires r0/h > sqrt(2/3)")]
    SpinBoundUndefined { ratio: f64 },
}

impl OrbitronError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Self::Validation {
            name,
            reason: reason.into(),
        }
    }

    /// True for input-validation failures, false for numerical/domain faults.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Validation { .. } | Self::NotSymmetric(_))
    }
}

pub type Result<T, E = OrbitronError> = std::result::Result<T, E>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(OrbitronError::invalid(
            name,
            format!("must be finite and strictly positive, got {value}"),
        ))
    }
}
