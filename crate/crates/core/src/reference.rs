//! Classical Newton–Euler model integrated with fixed-step RK4.
//!
//! Used as an independent oracle for the variational integrator. The
//! quaternion is renormalized after every step.
//!
//! With body momentum `μ = M χ = [h; p]` the equations of motion are
//!
//! ```text
//! q̇ = ½ q ∘ ω̂
//! l̇ = q ∘ v̂ ∘ q†
//! M χ̇ = τ - [ω × h + v × p; ω × p]
//! ```
//!
//! The bias term is only meaningful for symmetric inertias built from
//! `(m, J, r_g)`; exotic raw matrices are accepted but not validated.

use nalgebra::{Vector3, Vector6};

use crate::dual_quaternion::Pose;
use crate::dynamics::{total_potential, total_wrench, world_momentum, kinetic_energy, ForceModel, InertiaMatrix6};
use crate::error::Result;
use crate::kinematics::BodyTwist;
use crate::quaternion::{Quaternion, UnitQuaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousState {
    pub rotation: UnitQuaternion,
    pub translation: Vector3<f64>,
    pub twist: BodyTwist,
}

impl ContinuousState {
    pub fn new(pose: &Pose, twist: BodyTwist) -> Self {
        Self {
            rotation: pose.rotation(),
            translation: pose.translation(),
            twist,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::from_rotation_translation(&self.rotation, &self.translation)
    }

    pub fn kinetic_energy(&self, inertia: &InertiaMatrix6) -> f64 {
        kinetic_energy(inertia, &self.twist)
    }

    /// World angular (about the origin) and linear momentum.
    pub fn world_momentum(&self, inertia: &InertiaMatrix6) -> (Vector3<f64>, Vector3<f64>) {
        world_momentum(&self.pose(), &inertia.momentum(&self.twist))
    }

    pub fn total_energy(&self, inertia: &InertiaMatrix6, forces: &[Box<dyn ForceModel>]) -> f64 {
        self.kinetic_energy(inertia) + total_potential(forces, &self.pose())
    }
}

/// Time derivative of a [`ContinuousState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRate {
    pub rotation: Quaternion,
    pub translation: Vector3<f64>,
    pub twist: Vector6<f64>,
}

/// Gyroscopic and centripetal bias `[ω × h + v × p; ω × p]`.
pub fn bias(inertia: &InertiaMatrix6, twist: &BodyTwist) -> Vector6<f64> {
    let mu = inertia.momentum(twist);
    let h: Vector3<f64> = mu.fixed_rows::<3>(0).into();
    let p: Vector3<f64> = mu.fixed_rows::<3>(3).into();
    let (w, v) = (twist.angular, twist.linear);
    let a = w.cross(&h) + v.cross(&p);
    let b = w.cross(&p);
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

pub fn state_derivative(
    state: &ContinuousState,
    inertia: &InertiaMatrix6,
    forces: &[Box<dyn ForceModel>],
    t: f64,
) -> Result<StateRate> {
    let q = state.rotation;
    let pose = state.pose();
    let wrench = total_wrench(forces, &pose, &state.twist, t)?;
    let accel = inertia.inverse() * (wrench.to_vector() - bias(inertia, &state.twist));
    Ok(StateRate {
        rotation: q.quaternion().mul(&Quaternion::pure(&state.twist.angular)).scale(0.5),
        translation: q.rotate(&state.twist.linear),
        twist: accel,
    })
}

/// `state + dt * rate`, with the stage quaternion normalized for evaluation.
fn offset(state: &ContinuousState, rate: &StateRate, dt: f64) -> Result<ContinuousState> {
    Ok(ContinuousState {
        rotation: UnitQuaternion::new_normalize(state.rotation.quaternion() + rate.rotation.scale(dt))?,
        translation: state.translation + rate.translation * dt,
        twist: BodyTwist::from_vector(&(state.twist.to_vector() + rate.twist * dt)),
    })
}

pub fn rk4_step(
    state: &ContinuousState,
    inertia: &InertiaMatrix6,
    forces: &[Box<dyn ForceModel>],
    t: f64,
    h: f64,
) -> Result<ContinuousState> {
    let k1 = state_derivative(state, inertia, forces, t)?;
    let k2 = state_derivative(&offset(state, &k1, 0.5 * h)?, inertia, forces, t + 0.5 * h)?;
    let k3 = state_derivative(&offset(state, &k2, 0.5 * h)?, inertia, forces, t + 0.5 * h)?;
    let k4 = state_derivative(&offset(state, &k3, h)?, inertia, forces, t + h)?;
    let w = h / 6.0;
    let q = state.rotation.quaternion()
        + (k1.rotation + k2.rotation.scale(2.0) + k3.rotation.scale(2.0) + k4.rotation).scale(w);
    Ok(ContinuousState {
        rotation: UnitQuaternion::new_normalize(q)?,
        translation: state.translation
            + (k1.translation + k2.translation * 2.0 + k3.translation * 2.0 + k4.translation) * w,
        twist: BodyTwist::from_vector(
            &(state.twist.to_vector() + (k1.twist + k2.twist * 2.0 + k3.twist * 2.0 + k4.twist) * w),
        ),
    })
}

/// Integrates `n_steps` RK4 steps, returning all `n_steps + 1` states.
pub fn simulate_rk4(
    initial: ContinuousState,
    inertia: &InertiaMatrix6,
    forces: &[Box<dyn ForceModel>],
    h: f64,
    n_steps: usize,
) -> Result<Vec<ContinuousState>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(initial);
    let mut state = initial;
    for k in 0..n_steps {
        state = rk4_step(&state, inertia, forces, k as f64 * h, h)?;
        out.push(state);
    }
    Ok(out)
}

/// Final state only; avoids storing the trajectory.
pub fn propagate_rk4(
    initial: ContinuousState,
    inertia: &InertiaMatrix6,
    forces: &[Box<dyn ForceModel>],
    h: f64,
    n_steps: usize,
) -> Result<ContinuousState> {
    let mut state = initial;
    for k in 0..n_steps {
        state = rk4_step(&state, inertia, forces, k as f64 * h, h)?;
    }
    Ok(state)
}
