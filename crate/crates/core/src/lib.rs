//! Rigid-body dynamics on unit dual quaternions.
//!
//! - [`quaternion`], [`dual_quaternion`]: the algebra and exponential maps.
//! - [`kinematics`]: poses, twists, wrenches, screws.
//! - [`dynamics`]: 6×6 inertia, energies, force models.
//! - [`integrator`]: the dual quaternion variational integrator.
//! - [`reference`]: Newton–Euler/RK4 oracle.
//!
//! Storage order is `(w, x, y, z)` for quaternions and `(real, dual)` for dual
//! quaternions. Twists and wrenches are ordered angular first.

pub mod dual_quaternion;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod kinematics;
pub mod quaternion;
pub mod reference;

pub use dual_quaternion::{DualQuaternion, Pose, PureDualQuaternion, UnitDualQuaternion};
pub use dynamics::{ForceModel, InertiaMatrix6, PotentialField};
pub use error::{Error, Result};
pub use integrator::{simulate, IntegratorState, Simulation, SolverSettings, StepVariables, WarmStart};
pub use kinematics::{BodyTwist, Frame, ScrewParameters, WorldTwist, Wrench};
pub use quaternion::{PureQuaternion, Quaternion, UnitQuaternion};
