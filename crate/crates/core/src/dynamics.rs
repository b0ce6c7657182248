//! Generalized inertia, energies and force models.
//!
//! Force models return the wrench *applied to* the body, so conservative and
//! external contributions are simply summed by the integrator.

use std::fmt::Debug;

use nalgebra::{Cholesky, Matrix3, Matrix6, Vector3, Vector6};

use crate::dual_quaternion::{skew, DualQuaternion, Pose, Vector8};
use crate::error::{Error, Result};
use crate::kinematics::{transform_point_raw, BodyTwist, Frame, Wrench};

/// 1-norm condition number above which a 6×6 matrix is treated as singular.
const MAX_CONDITION: f64 = 1e14;

/// Relative step of the central differences in [`numeric_conservative_wrench`].
pub const GRADIENT_STEP: f64 = 1e-6;

/// 6×6 generalized mass matrix `[[M11, M12], [M21, M22]]` acting on `[ω; v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaMatrix6 {
    pub m11: Matrix3<f64>,
    pub m12: Matrix3<f64>,
    pub m21: Matrix3<f64>,
    pub m22: Matrix3<f64>,
    assembled: Matrix6<f64>,
    inverse: Matrix6<f64>,
    centered: bool,
}

pub(crate) fn condition_1(m: &Matrix6<f64>, inv: &Matrix6<f64>) -> f64 {
    fn norm1(m: &Matrix6<f64>) -> f64 {
        m.column_iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
    norm1(m) * norm1(inv)
}

impl InertiaMatrix6 {
    /// Rigid-body inertia about a reference point, from the mass, the inertia
    /// tensor about that point and the center-of-mass position in body axes.
    pub fn from_mass_properties(mass: f64, inertia: Matrix3<f64>, center_of_mass: Vector3<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInertia("mass must be positive"));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max().max(1.0) {
            return Err(Error::InvalidInertia("inertia tensor must be symmetric"));
        }
        if Cholesky::new(inertia).is_none() {
            return Err(Error::InvalidInertia("inertia tensor must be positive definite"));
        }
        let m12 = skew(&center_of_mass) * mass;
        Self::from_blocks(inertia, m12, -m12, Matrix3::identity() * mass)
    }

    /// Arbitrary invertible 6×6 matrix (e.g. including hydrodynamic added mass).
    pub fn from_matrix(m: Matrix6<f64>) -> Result<Self> {
        let block = |r, c| -> Matrix3<f64> { m.fixed_view::<3, 3>(r, c).into_owned() };
        Self::from_blocks(block(0, 0), block(0, 3), block(3, 0), block(3, 3))
    }

    fn from_blocks(m11: Matrix3<f64>, m12: Matrix3<f64>, m21: Matrix3<f64>, m22: Matrix3<f64>) -> Result<Self> {
        let mut assembled = Matrix6::zeros();
        assembled.fixed_view_mut::<3, 3>(0, 0).copy_from(&m11);
        assembled.fixed_view_mut::<3, 3>(0, 3).copy_from(&m12);
        assembled.fixed_view_mut::<3, 3>(3, 0).copy_from(&m21);
        assembled.fixed_view_mut::<3, 3>(3, 3).copy_from(&m22);
        if !assembled.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInertia("entries must be finite"));
        }
        let inverse = assembled
            .full_piv_lu()
            .try_inverse()
            .ok_or(Error::SingularMatrix)?;
        if condition_1(&assembled, &inverse) > MAX_CONDITION {
            return Err(Error::SingularMatrix);
        }
        let isotropic = m22 == Matrix3::identity() * m22[(0, 0)];
        let centered = m12 == Matrix3::zeros() && m21 == Matrix3::zeros() && isotropic;
        Ok(Self {
            m11,
            m12,
            m21,
            m22,
            assembled,
            inverse,
            centered,
        })
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.assembled
    }

    pub fn inverse(&self) -> &Matrix6<f64> {
        &self.inverse
    }

    /// True when the reference point is the center of mass (`M12 = M21 = 0`)
    /// and the mass block is isotropic.
    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Body-frame momentum `M χ`.
    pub fn momentum(&self, twist: &BodyTwist) -> Vector6<f64> {
        self.assembled * twist.to_vector()
    }

    pub fn twist_from_momentum(&self, momentum: &Vector6<f64>) -> BodyTwist {
        BodyTwist::from_vector(&(self.inverse * momentum))
    }
}

/// Inertia tensor about a point offset by `-center_of_mass` from the center
/// of mass, i.e. about a reference point that sees the CoM at `center_of_mass`.
pub fn parallel_axis(mass: f64, inertia_com: &Matrix3<f64>, center_of_mass: &Vector3<f64>) -> Matrix3<f64> {
    let r = center_of_mass;
    inertia_com + (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * mass
}

pub fn build_inertia(mass: f64, inertia: Matrix3<f64>, center_of_mass: Vector3<f64>) -> Result<InertiaMatrix6> {
    InertiaMatrix6::from_mass_properties(mass, inertia, center_of_mass)
}

pub fn build_inertia_raw(m: Matrix6<f64>) -> Result<InertiaMatrix6> {
    InertiaMatrix6::from_matrix(m)
}

/// `T = ½ χ·M·χ`.
pub fn kinetic_energy(inertia: &InertiaMatrix6, twist: &BodyTwist) -> f64 {
    let chi = twist.to_vector();
    0.5 * chi.dot(&(inertia.matrix() * chi))
}

/// World-frame momentum `(angular about the world origin, linear)`.
pub fn world_momentum(pose: &Pose, body_momentum: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let q = pose.rotation();
    let angular_b: Vector3<f64> = body_momentum.fixed_rows::<3>(0).into();
    let linear_b: Vector3<f64> = body_momentum.fixed_rows::<3>(3).into();
    let linear = q.rotate(&linear_b);
    let angular = q.rotate(&angular_b) + pose.translation().cross(&linear);
    (angular, linear)
}

/// A potential `U(p)` together with its body-frame conservative wrench.
pub trait PotentialField: Send + Sync + Debug {
    /// `U` evaluated at an arbitrary 8-vector; must agree with the physical
    /// potential on unit dual quaternions.
    fn energy_ambient(&self, p: &DualQuaternion) -> f64;

    /// Wrench applied to the body, in body axes.
    fn body_wrench(&self, pose: &Pose) -> Wrench;

    fn energy(&self, pose: &Pose) -> f64 {
        self.energy_ambient(&pose.dual_quaternion())
    }
}

/// Source of a wrench as a function of pose, body twist and time.
pub trait ForceModel: Send + Sync + Debug {
    fn wrench(&self, pose: &Pose, twist: &BodyTwist, t: f64) -> Wrench;

    fn is_conservative(&self) -> bool {
        false
    }

    /// Potential energy contribution; zero for non-conservative models.
    fn potential_energy(&self, _pose: &Pose) -> f64 {
        0.0
    }
}

/// Uniform gravity acting at the center of mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityField {
    pub mass: f64,
    pub gravity: Vector3<f64>,
    pub center_of_mass: Vector3<f64>,
}

pub fn gravity_potential(mass: f64, gravity: Vector3<f64>, center_of_mass: Vector3<f64>) -> GravityField {
    GravityField {
        mass,
        gravity,
        center_of_mass,
    }
}

impl PotentialField for GravityField {
    fn energy_ambient(&self, p: &DualQuaternion) -> f64 {
        -self.mass * self.gravity.dot(&transform_point_raw(p, &self.center_of_mass))
    }

    fn body_wrench(&self, pose: &Pose) -> Wrench {
        let force = pose.rotation().inverse_rotate(&(self.gravity * self.mass));
        Wrench::body(self.center_of_mass.cross(&force), force)
    }
}

/// Linear spring between a world anchor and a body-fixed attachment point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringField {
    pub anchor: Vector3<f64>,
    pub attachment: Vector3<f64>,
    pub stiffness: f64,
    pub rest_length: f64,
}

pub fn spring_potential(anchor: Vector3<f64>, attachment: Vector3<f64>, stiffness: f64, rest_length: f64) -> SpringField {
    SpringField {
        anchor,
        attachment,
        stiffness,
        rest_length,
    }
}

impl PotentialField for SpringField {
    fn energy_ambient(&self, p: &DualQuaternion) -> f64 {
        let d = transform_point_raw(p, &self.attachment) - self.anchor;
        let stretch = d.norm() - self.rest_length;
        0.5 * self.stiffness * stretch * stretch
    }

    fn body_wrench(&self, pose: &Pose) -> Wrench {
        let d = transform_point_raw(&pose.dual_quaternion(), &self.attachment) - self.anchor;
        let len = d.norm();
        let force_world = if len > 0.0 {
            -d * (self.stiffness * (len - self.rest_length) / len)
        } else {
            Vector3::zeros()
        };
        let force = pose.rotation().inverse_rotate(&force_world);
        Wrench::body(self.attachment.cross(&force), force)
    }
}

macro_rules! conservative_force_model {
    ($t:ty) => {
        impl ForceModel for $t {
            fn wrench(&self, pose: &Pose, _twist: &BodyTwist, _t: f64) -> Wrench {
                self.body_wrench(pose)
            }

            fn is_conservative(&self) -> bool {
                true
            }

            fn potential_energy(&self, pose: &Pose) -> f64 {
                self.energy(pose)
            }
        }
    };
}

conservative_force_model!(GravityField);
conservative_force_model!(SpringField);

/// Time-invariant wrench, in body or world axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantWrench(pub Wrench);

impl ForceModel for ConstantWrench {
    fn wrench(&self, _pose: &Pose, _twist: &BodyTwist, _t: f64) -> Wrench {
        self.0
    }
}

/// `τ = -D χ_B` in body axes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDamping {
    pub coefficients: Matrix6<f64>,
}

impl LinearDamping {
    pub fn diagonal(d: Vector6<f64>) -> Self {
        Self {
            coefficients: Matrix6::from_diagonal(&d),
        }
    }
}

impl ForceModel for LinearDamping {
    fn wrench(&self, _pose: &Pose, twist: &BodyTwist, _t: f64) -> Wrench {
        let w = -(self.coefficients * twist.to_vector());
        Wrench::body(w.fixed_rows::<3>(0).into(), w.fixed_rows::<3>(3).into())
    }
}

/// Body wrench `-½ p† ⊗ (∂U/∂p)*`, with the ambient gradient of `potential`
/// taken by central differences over the 8 coordinates.
pub fn numeric_conservative_wrench<F>(potential: F, pose: &Pose) -> Result<Wrench>
where
    F: Fn(&DualQuaternion) -> f64,
{
    let x = pose.dual_quaternion().to_vector8();
    let mut grad = Vector8::zeros();
    for i in 0..8 {
        let step = GRADIENT_STEP * x[i].abs().max(1.0);
        let mut plus = x;
        let mut minus = x;
        plus[i] += step;
        minus[i] -= step;
        let (up, um) = (
            potential(&DualQuaternion::from_vector8(&plus)),
            potential(&DualQuaternion::from_vector8(&minus)),
        );
        if !(up.is_finite() && um.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        grad[i] = (up - um) / (2.0 * step);
    }
    let grad = DualQuaternion::from_vector8(&grad);
    let tau_star = pose.dual_quaternion().quat_conjugate().mul(&grad.dual_transpose()).scale(-0.5);
    Ok(Wrench::body(tau_star.dual.vector(), tau_star.real.vector()))
}

/// Sum of all model wrenches, expressed in body axes.
pub fn total_wrench(models: &[Box<dyn ForceModel>], pose: &Pose, twist: &BodyTwist, t: f64) -> Result<Wrench> {
    models.iter().try_fold(Wrench::zero(Frame::Body), |acc, model| {
        acc.checked_add(&model.wrench(pose, twist, t).to_body(pose))
    })
}

/// Sum of the potential energies of the conservative models.
pub fn total_potential(models: &[Box<dyn ForceModel>], pose: &Pose) -> f64 {
    models.iter().map(|m| m.potential_energy(pose)).sum()
}
