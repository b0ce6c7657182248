use thiserror::Error;

use crate::kinematics::Frame;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quaternion is not unit length (|q| = {norm})")]
    NotUnit { norm: f64 },

    #[error("quaternion scalar part must be zero for a pure quaternion (got {scalar})")]
    NotPure { scalar: f64 },

    #[error(
        "dual quaternion is not a valid pose (unit-norm error {norm_error:e}, \
         orthogonality error {orthogonality_error:e})"
    )]
    InvalidPose {
        norm_error: f64,
        orthogonality_error: f64,
    },

    #[error(
        "pose rate is inconsistent with the unit constraint \
         (scalar parts {real_scalar:e}, {dual_scalar:e})"
    )]
    InconsistentRate { real_scalar: f64, dual_scalar: f64 },

    #[error("screw parameters invalid: {0}")]
    InvalidScrew(&'static str),

    #[error(
        "incremental rotation too large: |Phi| = {phi_norm} must stay below 1 \
         (the rotation between two time steps must be less than 180 degrees); reduce the time step"
    )]
    StepTooLarge { phi_norm: f64 },

    #[error("wrench frame mismatch: expected {expected:?}, got {found:?}")]
    FrameMismatch { expected: Frame, found: Frame },

    #[error("inertia invalid: {0}")]
    InvalidInertia(&'static str),

    #[error("matrix is singular or numerically not invertible")]
    SingularMatrix,

    #[error("potential evaluated to a non-finite value")]
    NonFiniteSample,

    #[error("invalid solver settings: {0}")]
    InvalidSettings(&'static str),

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual_norm:e})")]
    Divergence { iterations: usize, residual_norm: f64 },

    #[error("Jacobian is singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Strips step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::Divergence { .. } | Error::SingularJacobian { .. } | Error::StepTooLarge { .. }
        )
    }
}
