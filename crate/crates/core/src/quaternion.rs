//! Quaternion algebra in (w, x, y, z) storage order.
//!
//! [`Quaternion`] is the raw 4-component value. [`PureQuaternion`] and
//! [`UnitQuaternion`] are validated views used where the algebra requires a
//! zero scalar part or unit length. Nothing in this module renormalizes.

use std::ops::{Add, AddAssign, Neg, Sub};

use nalgebra::{Vector3, Vector4};

use crate::error::{Error, Result};

/// Tolerance on `| |q| - 1 |` accepted by [`UnitQuaternion::new`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Below this vector-part magnitude the exponential uses its Taylor branch.
pub(crate) const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_scalar_vector(w: f64, v: &Vector3<f64>) -> Self {
        Self::new(w, v.x, v.y, v.z)
    }

    /// Pure quaternion `[0, v]`.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::from_scalar_vector(0.0, v)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn to_vector4(self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn scalar(&self) -> f64 {
        self.w
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Hamilton product `self ∘ rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (self.vector(), rhs.vector());
        let w = self.w * rhs.w - a.dot(&b);
        let v = b * self.w + a * rhs.w + a.cross(&b);
        Self::from_scalar_vector(w, &v)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Euclidean dot product of the 4-vectors.
    pub fn dot(&self, rhs: &Self) -> f64 {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Quaternion exponential, `exp(w) (cos|v|, sin|v| v/|v|)`.
    pub fn exp(&self) -> Self {
        let v = self.vector();
        let angle = v.norm();
        let (c, sinc) = cos_sinc(angle);
        Self::from_scalar_vector(c, &(v * sinc)).scale(self.w.exp())
    }
}

/// `(cos x, sin(x)/x)` with the small-angle limit handled.
pub(crate) fn cos_sinc(x: f64) -> (f64, f64) {
    if x < SMALL_ANGLE {
        let x2 = x * x;
        (1.0 - 0.5 * x2, 1.0 - x2 / 6.0)
    } else {
        (x.cos(), x.sin() / x)
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.w + rhs.w, self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.w - rhs.w, self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// Quaternion with scalar part exactly zero; the embedding of a 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PureQuaternion(Vector3<f64>);

impl PureQuaternion {
    pub fn new(v: Vector3<f64>) -> Self {
        Self(v)
    }

    pub fn try_from_quaternion(q: Quaternion) -> Result<Self> {
        if q.w != 0.0 {
            return Err(Error::NotPure { scalar: q.w });
        }
        Ok(Self(q.vector()))
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn quaternion(&self) -> Quaternion {
        Quaternion::pure(&self.0)
    }

    /// Exponential of a pure quaternion; always unit.
    pub fn exp(&self) -> UnitQuaternion {
        UnitQuaternion(self.quaternion().exp())
    }
}

/// Unit quaternion, a double cover of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self(Quaternion::IDENTITY);

    /// Validates `| |q| - 1 | <= 1e-12`.
    pub fn new(q: Quaternion) -> Result<Self> {
        let norm = q.norm();
        if !q.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(q))
    }

    /// Divides by the norm. Only for building inputs, never applied to integrator state.
    pub fn new_normalize(q: Quaternion) -> Result<Self> {
        let norm = q.norm();
        if !q.is_finite() || norm == 0.0 {
            return Err(Error::NotUnit { norm });
        }
        Ok(Self(q.scale(1.0 / norm)))
    }

    pub(crate) fn new_unchecked(q: Quaternion) -> Self {
        Self(q)
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.normalize();
        PureQuaternion::new(n * (0.5 * angle)).exp()
    }

    pub fn quaternion(&self) -> Quaternion {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self(self.0.mul(&rhs.0))
    }

    /// `q ∘ r̂ ∘ q†`.
    pub fn rotate(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.0.mul(&Quaternion::pure(r)).mul(&self.0.conjugate()).vector()
    }

    /// `q† ∘ r̂ ∘ q`.
    pub fn inverse_rotate(&self, r: &Vector3<f64>) -> Vector3<f64> {
        self.0.conjugate().mul(&Quaternion::pure(r)).mul(&self.0).vector()
    }

    pub fn to_rotation_matrix(&self) -> nalgebra::Matrix3<f64> {
        let Quaternion { w, x, y, z } = self.0;
        nalgebra::Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

pub fn quat_mul(q1: &Quaternion, q2: &Quaternion) -> Quaternion {
    q1.mul(q2)
}

pub fn quat_conjugate(q: &Quaternion) -> Quaternion {
    q.conjugate()
}

pub fn quat_exp(eta: &Quaternion) -> Quaternion {
    eta.exp()
}
