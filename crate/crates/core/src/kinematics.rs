//! Poses, twists, wrenches and screws on top of the dual quaternion algebra.
//!
//! All 6-vectors are ordered **angular first**: a twist is `[ω; v]` and a
//! wrench is `[torque; force]`. A world-frame twist or wrench is expressed in
//! world axes at the body reference point, so `v_W = dl/dt`.

use nalgebra::{Vector3, Vector6};

use crate::dual_quaternion::{DualQuaternion, Pose, PureDualQuaternion};
use crate::error::{Error, Result};
use crate::quaternion::{Quaternion, UnitQuaternion};

/// Tolerance on the scalar parts of `2 p† ⊗ ṗ`.
pub const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Body,
    World,
}

fn stack(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
}

fn split(v: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
}

/// Body-frame twist `[ω_B; v_B]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl BodyTwist {
    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Self { angular, linear }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        let (angular, linear) = split(v);
        Self { angular, linear }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.angular, &self.linear)
    }

    /// `χ̌_B` as a pure dual quaternion.
    pub fn to_pure(&self) -> PureDualQuaternion {
        PureDualQuaternion::from_parts(&self.angular, &self.linear)
    }
}

/// World-frame twist `[ω_W; v_W]` with `v_W = dl/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldTwist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl WorldTwist {
    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.angular, &self.linear)
    }
}

/// `[torque; force]` tagged with the frame its components are expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub torque: Vector3<f64>,
    pub force: Vector3<f64>,
    pub frame: Frame,
}

impl Wrench {
    pub fn new(torque: Vector3<f64>, force: Vector3<f64>, frame: Frame) -> Self {
        Self {
            torque,
            force,
            frame,
        }
    }

    pub fn body(torque: Vector3<f64>, force: Vector3<f64>) -> Self {
        Self::new(torque, force, Frame::Body)
    }

    pub fn world(torque: Vector3<f64>, force: Vector3<f64>) -> Self {
        Self::new(torque, force, Frame::World)
    }

    pub fn zero(frame: Frame) -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), frame)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        stack(&self.torque, &self.force)
    }

    pub fn checked_add(&self, rhs: &Wrench) -> Result<Wrench> {
        if self.frame != rhs.frame {
            return Err(Error::FrameMismatch {
                expected: self.frame,
                found: rhs.frame,
            });
        }
        Ok(Wrench::new(self.torque + rhs.torque, self.force + rhs.force, self.frame))
    }

    /// Re-expresses the wrench in body axes.
    pub fn to_body(&self, pose: &Pose) -> Wrench {
        match self.frame {
            Frame::Body => *self,
            Frame::World => {
                let q = pose.rotation();
                Wrench::body(q.inverse_rotate(&self.torque), q.inverse_rotate(&self.force))
            }
        }
    }

    pub fn to_world(&self, pose: &Pose) -> Wrench {
        match self.frame {
            Frame::World => *self,
            Frame::Body => {
                let q = pose.rotation();
                Wrench::world(q.rotate(&self.torque), q.rotate(&self.force))
            }
        }
    }

    pub fn require_frame(&self, frame: Frame) -> Result<()> {
        if self.frame == frame {
            Ok(())
        } else {
            Err(Error::FrameMismatch {
                expected: frame,
                found: self.frame,
            })
        }
    }
}

/// Screw motion: rotation `angle` about the line with direction `axis` and
/// moment `moment`, plus `displacement` along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewParameters {
    pub axis: Vector3<f64>,
    pub moment: Vector3<f64>,
    pub angle: f64,
    pub displacement: f64,
}

impl ScrewParameters {
    pub fn new(axis: Vector3<f64>, moment: Vector3<f64>, angle: f64, displacement: f64) -> Result<Self> {
        if ((axis.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::InvalidScrew("axis must be a unit vector"));
        }
        if axis.dot(&moment).abs() > 1e-12 {
            return Err(Error::InvalidScrew("moment must be orthogonal to the axis"));
        }
        if !(angle.is_finite() && displacement.is_finite()) {
            return Err(Error::InvalidScrew("angle and displacement must be finite"));
        }
        Ok(Self {
            axis,
            moment,
            angle,
            displacement,
        })
    }

    /// Screw through point `point` along `axis`.
    pub fn through_point(axis: Vector3<f64>, point: &Vector3<f64>, angle: f64, displacement: f64) -> Result<Self> {
        let moment = point.cross(&axis);
        Self::new(axis, moment, angle, displacement)
    }

    pub fn zero() -> Self {
        Self {
            axis: Vector3::z(),
            moment: Vector3::zeros(),
            angle: 0.0,
            displacement: 0.0,
        }
    }
}

/// Builds a pose from a raw quaternion, rejecting non-unit rotations.
pub fn pose_from_rotation_translation(q: &Quaternion, l: &Vector3<f64>) -> Result<Pose> {
    let q = UnitQuaternion::new(*q)?;
    Ok(Pose::from_rotation_translation(&q, l))
}

pub fn pose_to_rotation_translation(p: &DualQuaternion) -> Result<(UnitQuaternion, Vector3<f64>)> {
    let pose = Pose::try_new(*p)?;
    Ok((pose.rotation(), pose.translation()))
}

/// `r' = 2 r'_b ∘ r'_a†` with `r̃' = p ⊗ (1 + ε r̂/2)`.
pub fn transform_point(p: &Pose, r: &Vector3<f64>) -> Vector3<f64> {
    transform_point_raw(&p.dual_quaternion(), r)
}

/// Same formula on an arbitrary dual quaternion; used for gradient sampling
/// off the unit manifold.
pub(crate) fn transform_point_raw(p: &DualQuaternion, r: &Vector3<f64>) -> Vector3<f64> {
    let point = DualQuaternion::new(Quaternion::IDENTITY, Quaternion::pure(r).scale(0.5));
    let moved = p.mul(&point);
    moved.dual.mul(&moved.real.conjugate()).vector() * 2.0
}

pub fn rotate_vector(q: &UnitQuaternion, r: &Vector3<f64>) -> Vector3<f64> {
    q.rotate(r)
}

/// `χ̌_B = 2 p† ⊗ ṗ`.
pub fn body_twist_from_pose_rate(p: &Pose, p_dot: &DualQuaternion) -> Result<BodyTwist> {
    let chi = p.dual_quaternion().quat_conjugate().mul(p_dot).scale(2.0);
    if chi.real.w.abs() > RATE_TOLERANCE || chi.dual.w.abs() > RATE_TOLERANCE {
        return Err(Error::InconsistentRate {
            real_scalar: chi.real.w,
            dual_scalar: chi.dual.w,
        });
    }
    Ok(BodyTwist::from_vector(&chi.vector_part()))
}

/// `ṗ = ½ p ⊗ χ̌_B`.
pub fn pose_rate(p: &Pose, twist: &BodyTwist) -> DualQuaternion {
    p.dual_quaternion().mul(&twist.to_pure().dual_quaternion()).scale(0.5)
}

pub fn twist_world_from_body(p: &Pose, twist: &BodyTwist) -> WorldTwist {
    let q = p.rotation();
    WorldTwist {
        angular: q.rotate(&twist.angular),
        linear: q.rotate(&twist.linear),
    }
}

pub fn twist_body_from_world(p: &Pose, twist: &WorldTwist) -> BodyTwist {
    let q = p.rotation();
    BodyTwist::new(q.inverse_rotate(&twist.angular), q.inverse_rotate(&twist.linear))
}

/// `χ̌ = 2 ṗ ⊗ p†`: angular part `ω_W`, dual part `dl/dt + l × ω_W`.
pub fn spatial_twist(p: &Pose, twist: &BodyTwist) -> PureDualQuaternion {
    let p_dot = pose_rate(p, twist);
    let chi = p_dot.mul(&p.dual_quaternion().quat_conjugate()).scale(2.0);
    PureDualQuaternion::new(chi.vector_part())
}

/// Generalized force `F̃` paired with `ṗ` under the work identity.
///
/// Body wrenches use `F̃* = 2 p ⊗ τ̌_B*`. World wrenches are first moved to
/// the world origin, `τ_S = [τ_W + l × f_W; f_W]`, and use `F̃* = 2 τ̌_S* ⊗ p`.
pub fn wrench_to_dual_force(p: &Pose, wrench: &Wrench) -> DualQuaternion {
    let f_star = match wrench.frame {
        Frame::Body => {
            let tau_star = DualQuaternion::pure(&wrench.force, &wrench.torque);
            p.dual_quaternion().mul(&tau_star)
        }
        Frame::World => {
            let l = p.translation();
            let spatial_torque = wrench.torque + l.cross(&wrench.force);
            let tau_star = DualQuaternion::pure(&wrench.force, &spatial_torque);
            tau_star.mul(&p.dual_quaternion())
        }
    };
    f_star.scale(2.0).dual_transpose()
}

/// Inverse of [`wrench_to_dual_force`], reading the 2nd–4th and 6th–8th
/// components of `½ p† ⊗ F̃*`.
pub fn dual_force_to_body_wrench(p: &Pose, force: &DualQuaternion) -> Wrench {
    let tau_star = p.dual_quaternion().quat_conjugate().mul(&force.dual_transpose()).scale(0.5);
    Wrench::body(tau_star.dual.vector(), tau_star.real.vector())
}

/// Decomposes a pose into screw parameters with `angle ∈ [0, π]`.
///
/// Rotation angles below `1e-8` are treated as a pure translation; when the
/// translation is also below `1e-12` the zero screw about `ẑ` is returned.
pub fn screw_decompose(p: &Pose) -> ScrewParameters {
    let log = p.log();
    let rho = log.real() * 2.0;
    let u = log.dual() * 2.0;
    let angle = rho.norm();
    if angle < 1e-8 {
        let d = u.norm();
        if d < 1e-12 {
            return ScrewParameters::zero();
        }
        return ScrewParameters {
            axis: u / d,
            moment: Vector3::zeros(),
            angle: 0.0,
            displacement: d,
        };
    }
    let axis = rho / angle;
    let displacement = axis.dot(&u);
    let moment = (u - axis * displacement) / angle;
    ScrewParameters {
        axis,
        moment,
        angle,
        displacement,
    }
}

/// `p = exp(š Θ / 2)` with dual angle `Θ = angle + ε displacement`.
pub fn screw_compose(s: &ScrewParameters) -> Pose {
    let half = 0.5;
    let real = s.axis * (s.angle * half);
    let dual = (s.moment * s.angle + s.axis * s.displacement) * half;
    PureDualQuaternion::from_parts(&real, &dual).exp()
}

/// Magnitude of the screw taking `a` to `b`: the norm of `2 log(a† ⊗ b)`.
pub fn pose_distance(a: &Pose, b: &Pose) -> f64 {
    a.inverse().mul(b).log().vector().norm() * 2.0
}
