//! Dual quaternions `p = p_a + ε p_b` with `ε² = 0`, stored as (real, dual).
//!
//! Unit dual quaternions ([`Pose`]) double-cover SE(3). The 8-vector view used
//! by dot products and serialization is `[real.w, real.x, real.y, real.z,
//! dual.w, dual.x, dual.y, dual.z]`.

use std::ops::{Add, Neg, Sub};

use nalgebra::{Matrix3, SVector, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::quaternion::{cos_sinc, Quaternion, UnitQuaternion, SMALL_ANGLE};

pub type Vector8 = SVector<f64, 8>;

/// Tolerance used by [`Pose::try_new`] on both unit constraints.
pub const POSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const IDENTITY: Self = Self::new(Quaternion::IDENTITY, Quaternion::ZERO);
    pub const ZERO: Self = Self::new(Quaternion::ZERO, Quaternion::ZERO);

    pub const fn new(real: Quaternion, dual: Quaternion) -> Self {
        Self { real, dual }
    }

    /// Pure dual quaternion `[0, a; 0, b]`.
    pub fn pure(a: &Vector3<f64>, b: &Vector3<f64>) -> Self {
        Self::new(Quaternion::pure(a), Quaternion::pure(b))
    }

    pub fn from_vector8(v: &Vector8) -> Self {
        Self::new(
            Quaternion::new(v[0], v[1], v[2], v[3]),
            Quaternion::new(v[4], v[5], v[6], v[7]),
        )
    }

    pub fn to_vector8(self) -> Vector8 {
        let (a, b) = (self.real, self.dual);
        Vector8::from([a.w, a.x, a.y, a.z, b.w, b.x, b.y, b.z])
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self::from_vector8(&Vector8::from(a))
    }

    pub fn to_array(self) -> [f64; 8] {
        self.to_vector8().into()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new(
            self.real.mul(&rhs.real),
            self.real.mul(&rhs.dual) + self.dual.mul(&rhs.real),
        )
    }

    /// Quaternion conjugate `p†`: both parts conjugated.
    pub fn quat_conjugate(&self) -> Self {
        Self::new(self.real.conjugate(), self.dual.conjugate())
    }

    /// Dual transpose `p*`: real and dual parts swapped.
    pub fn dual_transpose(&self) -> Self {
        Self::new(self.dual, self.real)
    }

    pub fn dot(&self, rhs: &Self) -> f64 {
        self.real.dot(&rhs.real) + self.dual.dot(&rhs.dual)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.real.scale(s), self.dual.scale(s))
    }

    pub fn is_finite(&self) -> bool {
        self.real.is_finite() && self.dual.is_finite()
    }

    /// The 6-vector `[real.xyz; dual.xyz]`, discarding both scalar parts.
    pub fn vector_part(&self) -> Vector6<f64> {
        let (a, b) = (self.real.vector(), self.dual.vector());
        Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z)
    }

    pub fn unit_norm_error(&self) -> f64 {
        (self.real.norm() - 1.0).abs()
    }

    pub fn orthogonality_error(&self) -> f64 {
        self.real.dot(&self.dual).abs()
    }
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.real + rhs.real, self.dual + rhs.dual)
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.real - rhs.real, self.dual - rhs.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Dual quaternion with both scalar parts zero; carries a 6-vector `[a; b]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PureDualQuaternion(Vector6<f64>);

impl PureDualQuaternion {
    pub fn new(v: Vector6<f64>) -> Self {
        Self(v)
    }

    pub fn from_parts(a: &Vector3<f64>, b: &Vector3<f64>) -> Self {
        Self(Vector6::new(a.x, a.y, a.z, b.x, b.y, b.z))
    }

    pub fn try_from_dual_quaternion(p: DualQuaternion) -> Result<Self> {
        if p.real.w != 0.0 {
            return Err(Error::NotPure { scalar: p.real.w });
        }
        if p.dual.w != 0.0 {
            return Err(Error::NotPure { scalar: p.dual.w });
        }
        Ok(Self(p.vector_part()))
    }

    pub fn vector(&self) -> Vector6<f64> {
        self.0
    }

    pub fn real(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into()
    }

    pub fn dual(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into()
    }

    pub fn dual_quaternion(&self) -> DualQuaternion {
        DualQuaternion::pure(&self.real(), &self.dual())
    }

    /// Exponential map onto the unit dual quaternions.
    ///
    /// Closed form obtained by evaluating `(cos|η|, sin|η|/|η| η)` in dual-number
    /// arithmetic, with `|η| = θ + ε (a·b)/θ`.
    pub fn exp(&self) -> Pose {
        let (a, b) = (self.real(), self.dual());
        let theta = a.norm();
        let ab = a.dot(&b);
        let (c, sinc) = cos_sinc(theta);
        // d/dθ sinc(θ) divided by θ, i.e. (θ cos θ - sin θ) / θ³
        let dsinc = if theta < 0.1 {
            let t2 = theta * theta;
            -1.0 / 3.0 + t2 * (1.0 / 30.0 + t2 * (-1.0 / 840.0 + t2 * (1.0 / 45360.0 - t2 / 3991680.0)))
        } else {
            (theta * theta.cos() - theta.sin()) / (theta * theta * theta)
        };
        let real = Quaternion::from_scalar_vector(c, &(a * sinc));
        let dual = Quaternion::from_scalar_vector(-sinc * ab, &(b * sinc + a * (dsinc * ab)));
        Pose(DualQuaternion::new(real, dual))
    }
}

/// Unit dual quaternion: `|real| = 1` and `real · dual = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(DualQuaternion);

pub type UnitDualQuaternion = Pose;

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Self = Self(DualQuaternion::IDENTITY);

    /// Accepts `p` when both unit constraints hold to [`POSE_TOLERANCE`].
    pub fn try_new(p: DualQuaternion) -> Result<Self> {
        let norm_error = p.unit_norm_error();
        let orthogonality_error = p.orthogonality_error();
        if !p.is_finite() || norm_error > POSE_TOLERANCE || orthogonality_error > POSE_TOLERANCE {
            return Err(Error::InvalidPose {
                norm_error,
                orthogonality_error,
            });
        }
        Ok(Self(p))
    }

    pub(crate) fn new_unchecked(p: DualQuaternion) -> Self {
        Self(p)
    }

    /// `q + ε ½ l̂ ∘ q`.
    pub fn from_rotation_translation(q: &UnitQuaternion, l: &Vector3<f64>) -> Self {
        let q = q.quaternion();
        Self(DualQuaternion::new(q, Quaternion::pure(l).mul(&q).scale(0.5)))
    }

    pub fn from_translation(l: &Vector3<f64>) -> Self {
        Self::from_rotation_translation(&UnitQuaternion::IDENTITY, l)
    }

    pub fn from_rotation(q: &UnitQuaternion) -> Self {
        Self::from_rotation_translation(q, &Vector3::zeros())
    }

    pub fn dual_quaternion(&self) -> DualQuaternion {
        self.0
    }

    pub fn real(&self) -> Quaternion {
        self.0.real
    }

    pub fn dual(&self) -> Quaternion {
        self.0.dual
    }

    pub fn rotation(&self) -> UnitQuaternion {
        UnitQuaternion::new_unchecked(self.0.real)
    }

    /// `l̂ = 2 p_b ∘ p_a†`.
    pub fn translation(&self) -> Vector3<f64> {
        self.0.dual.mul(&self.0.real.conjugate()).vector() * 2.0
    }

    pub fn mul(&self, rhs: &Pose) -> Pose {
        Pose(self.0.mul(&rhs.0))
    }

    pub fn inverse(&self) -> Pose {
        Pose(self.0.quat_conjugate())
    }

    pub fn neg(&self) -> Pose {
        Pose(-self.0)
    }

    pub fn unit_norm_error(&self) -> f64 {
        self.0.unit_norm_error()
    }

    pub fn orthogonality_error(&self) -> f64 {
        self.0.orthogonality_error()
    }

    /// Logarithm, the inverse of [`PureDualQuaternion::exp`], taken on the
    /// representative with non-negative real scalar part.
    pub fn log(&self) -> PureDualQuaternion {
        let p = if self.0.real.w < 0.0 { -self.0 } else { self.0 };
        let v = p.real.vector();
        let half_angle = v.norm().atan2(p.real.w);
        let rot = if half_angle < SMALL_ANGLE {
            v * (1.0 + half_angle * half_angle / 6.0)
        } else {
            v * (half_angle / half_angle.sin())
        } * 2.0;
        let t = p.dual.mul(&p.real.conjugate()).vector() * 2.0;
        let u = se3_left_jacobian_inverse(&rot) * t;
        PureDualQuaternion::from_parts(&(rot * 0.5), &(u * 0.5))
    }

    /// 4×4 homogeneous transform.
    pub fn to_homogeneous(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation().to_rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation());
        m
    }
}

/// `V(ρ)⁻¹` for the SE(3) exponential, `t = V(ρ) u`.
fn se3_left_jacobian_inverse(rho: &Vector3<f64>) -> Matrix3<f64> {
    let theta = rho.norm();
    let s = skew(rho);
    let coeff = if theta < 0.1 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 * (1.0 / 720.0 + t2 * (1.0 / 30240.0 + t2 / 1209600.0))
    } else {
        (1.0 - theta * theta.sin() / (2.0 * (1.0 - theta.cos()))) / (theta * theta)
    };
    Matrix3::identity() - s * 0.5 + s * s * coeff
}

/// Cross-product matrix, `skew(a) b = a × b`.
pub fn skew(r: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -r.z, r.y, r.z, 0.0, -r.x, -r.y, r.x, 0.0)
}

pub fn dq_mul(p1: &DualQuaternion, p2: &DualQuaternion) -> DualQuaternion {
    p1.mul(p2)
}

pub fn dq_quat_conjugate(p: &DualQuaternion) -> DualQuaternion {
    p.quat_conjugate()
}

pub fn dq_dual_transpose(p: &DualQuaternion) -> DualQuaternion {
    p.dual_transpose()
}

pub fn dq_exp(eta: &PureDualQuaternion) -> Pose {
    eta.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dq(rng: &mut impl Rng) -> DualQuaternion {
        let mut a = [0.0; 8];
        a.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        DualQuaternion::from_array(a)
    }

    fn random_v3(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
        if scale == 0.0 {
            return Vector3::zeros();
        }
        Vector3::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    }

    // (a1 + ε b1)(a2 + ε b2) expanded symbolically as polynomials in ε with ε² = 0
    fn epsilon_expansion(p1: &DualQuaternion, p2: &DualQuaternion) -> DualQuaternion {
        let terms = [
            (0, p1.real.mul(&p2.real)),
            (1, p1.real.mul(&p2.dual)),
            (1, p1.dual.mul(&p2.real)),
            (2, p1.dual.mul(&p2.dual)),
        ];
        let mut coeffs = [Quaternion::ZERO; 3];
        for (order, q) in terms {
            coeffs[order] += q;
        }
        DualQuaternion::new(coeffs[0], coeffs[1])
    }

    #[test]
    fn identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let p = random_dq(&mut rng);
            assert_eq!(dq_mul(&DualQuaternion::IDENTITY, &p), p);
            let unit = PureDualQuaternion::new(Vector6::from_fn(|_, _| rng.random_range(-1.0..1.0))).exp();
            let pp = unit.mul(&unit.inverse()).dual_quaternion();
            assert_relative_eq!(pp.to_vector8(), DualQuaternion::IDENTITY.to_vector8(), epsilon = 1e-15);
            let pp = unit.inverse().mul(&unit).dual_quaternion();
            assert_relative_eq!(pp.to_vector8(), DualQuaternion::IDENTITY.to_vector8(), epsilon = 1e-15);
        }
    }

    #[test]
    fn product_matches_epsilon_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, b) = (random_dq(&mut rng), random_dq(&mut rng));
            assert_relative_eq!(
                dq_mul(&a, &b).to_vector8(),
                epsilon_expansion(&a, &b).to_vector8(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn conjugations_are_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_dq(&mut rng);
        assert_eq!(dq_dual_transpose(&dq_dual_transpose(&p)), p);
        assert_eq!(dq_quat_conjugate(&dq_quat_conjugate(&p)), p);
        assert_eq!(dq_quat_conjugate(&DualQuaternion::IDENTITY), DualQuaternion::IDENTITY);
    }

    #[test]
    fn exp_cases() {
        assert_eq!(dq_exp(&PureDualQuaternion::default()), Pose::IDENTITY);

        let rot = Vector3::z() * std::f64::consts::FRAC_PI_4;
        let p = dq_exp(&PureDualQuaternion::from_parts(&rot, &Vector3::zeros()));
        let q = Quaternion::pure(&rot).exp();
        assert_relative_eq!(p.real().to_vector4(), q.to_vector4(), epsilon = 1e-16);
        assert_eq!(p.dual(), Quaternion::ZERO);

        // translation screw: θa = 0, θb = d, s_a = ẑ, s_b = 0 → η = (0, ẑ d/2)
        let d = 0.8;
        let p = dq_exp(&PureDualQuaternion::from_parts(&Vector3::zeros(), &(Vector3::z() * d * 0.5)));
        let expected = Pose::from_translation(&Vector3::new(0.0, 0.0, d));
        assert_relative_eq!(
            p.dual_quaternion().to_vector8(),
            expected.dual_quaternion().to_vector8(),
            epsilon = 1e-16
        );
        assert_relative_eq!(p.dual().z, d / 2.0);
    }

    #[test]
    fn exp_matches_power_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for i in 0..100 {
            let scale = if i % 2 == 0 { 1.5 } else { 1e-5 };
            let eta = PureDualQuaternion::from_parts(&random_v3(&mut rng, scale), &random_v3(&mut rng, 1.0));
            let x = eta.dual_quaternion();
            let mut term = DualQuaternion::IDENTITY;
            let mut sum = DualQuaternion::IDENTITY;
            for k in 1..40 {
                term = term.mul(&x).scale(1.0 / k as f64);
                sum = sum + term;
            }
            assert_relative_eq!(eta.exp().dual_quaternion().to_vector8(), sum.to_vector8(), epsilon = 1e-13);
        }
    }

    #[test]
    fn log_inverts_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for i in 0..200 {
            // |a| stays below π/2, where log is the principal branch
            let scale = [0.9, 1e-3, 1e-9, 0.0][i % 4];
            let eta = PureDualQuaternion::from_parts(&random_v3(&mut rng, scale), &random_v3(&mut rng, 2.0));
            let back = eta.exp().log();
            assert_relative_eq!(back.vector(), eta.vector(), epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_matrix_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..200 {
            let a = PureDualQuaternion::from_parts(&random_v3(&mut rng, 1.5), &random_v3(&mut rng, 2.0)).exp();
            let b = PureDualQuaternion::from_parts(&random_v3(&mut rng, 1.5), &random_v3(&mut rng, 2.0)).exp();
            let lhs = a.mul(&b).to_homogeneous();
            let rhs = a.to_homogeneous() * b.to_homogeneous();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
            assert_relative_eq!(a.neg().to_homogeneous(), a.to_homogeneous(), epsilon = 1e-15);
        }
    }

    #[test]
    fn try_new_checks_constraints() {
        assert!(Pose::try_new(DualQuaternion::IDENTITY).is_ok());
        let bad = DualQuaternion::new(Quaternion::IDENTITY, Quaternion::new(0.1, 0.0, 0.0, 0.0));
        assert!(matches!(Pose::try_new(bad), Err(Error::InvalidPose { .. })));
        assert!(Pose::try_new(DualQuaternion::ZERO).is_err());
    }
}
