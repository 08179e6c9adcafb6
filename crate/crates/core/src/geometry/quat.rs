//! Hamilton quaternions, scalar-first `(w, x, y, z)`.
//!
//! Pure quaternions (`w = 0`) embed 3-vectors, which is how relative point
//! vectors enter the rotation filter.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Tolerance on `| ‖q‖ − 1 |` for a quaternion to count as unit.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Pure quaternion `{0, v}`.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Self::new(0.0, v.x, v.y, v.z)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn vector_part(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Rotation of `angle` radians about `axis`. The axis need not be unit;
    /// a zero axis yields the identity.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    /// Rotation vector (axis scaled by angle) to quaternion.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        Self::from_axis_angle(v, v.norm())
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn normalized(self) -> Result<Self, GeometryError> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeometryError::ZeroQuaternion);
        }
        Ok(Self::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Rotates `v` by this (unit) quaternion, `q ⊙ {0,v} ⊙ q*`.
    pub fn rotate(self, v: &Vector3<f64>) -> Vector3<f64> {
        // t = 2 u × v; v' = v + w t + u × t
        let u = self.vector_part();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    /// Rotation matrix of a unit quaternion.
    pub fn to_rotmat(self) -> Result<Matrix3<f64>, GeometryError> {
        if !self.is_unit() {
            return Err(GeometryError::NonUnitQuaternion(self.norm()));
        }
        Ok(self.to_rotmat_unchecked())
    }

    pub(crate) fn to_rotmat_unchecked(self) -> Matrix3<f64> {
        let Quat { w, x, y, z } = self;
        Matrix3::new(
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

    /// Shepperd's method; the result has `w ≥ 0`.
    pub fn from_rotmat(m: &Matrix3<f64>) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = 2.0 * (trace + 1.0).sqrt();
            Self::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = 2.0 * (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt();
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = 2.0 * (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt();
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let q = if q.w < 0.0 { -q } else { q };
        q.normalized().unwrap_or(Self::IDENTITY)
    }

    /// Distance modulo the double cover: `min(‖q − p‖, ‖q + p‖)`.
    pub fn sign_invariant_distance(self, other: Self) -> f64 {
        let d = (self.to_vector() - other.to_vector()).norm();
        let s = (self.to_vector() + other.to_vector()).norm();
        d.min(s)
    }

    /// Geodesic angle (radians, in `[0, π]`) between the rotations of two
    /// unit quaternions.
    pub fn angle_to(self, other: Self) -> f64 {
        let r = quat_mul(self.conj(), other);
        2.0 * r.vector_part().norm().atan2(r.w.abs())
    }

    /// Matrix `L(q)` such that `q ⊙ p = L(q) p` on 4-vectors.
    pub fn left_matrix(self) -> Matrix4<f64> {
        let Quat { w, x, y, z } = self;
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        )
    }

    /// Matrix `R(q)` such that `p ⊙ q = R(q) p` on 4-vectors.
    pub fn right_matrix(self) -> Matrix4<f64> {
        let Quat { w, x, y, z } = self;
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, z, -y, //
            y, -z, w, x, //
            z, y, -x, w,
        )
    }
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, rhs: Quat) -> Quat {
        quat_mul(self, rhs)
    }
}

/// Hamilton product `a ⊙ b`.
pub fn quat_mul(a: Quat, b: Quat) -> Quat {
    Quat::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

/// Rotation matrix of a unit quaternion; non-unit input is rejected.
pub fn quat_to_rotmat(q: Quat) -> Result<Matrix3<f64>, GeometryError> {
    q.to_rotmat()
}

/// Cross-product matrix: `skew(v) · u = v × u`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn identity_is_neutral() {
        let q = Quat::new(0.5, -0.5, 0.5, 0.5);
        assert_eq!(quat_mul(Quat::IDENTITY, q), q);
        assert_eq!(quat_mul(q, Quat::IDENTITY), q);
    }

    #[test]
    fn conjugate_product_is_identity() {
        let q = Quat::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 1.1);
        let p = quat_mul(q, q.conj());
        assert_relative_eq!(p.to_vector(), Quat::IDENTITY.to_vector(), epsilon = 1e-12);
    }

    #[test]
    fn two_quarter_turns_make_a_half_turn() {
        let q = Quat::new(H, 0.0, 0.0, H);
        let p = quat_mul(q, q);
        assert_relative_eq!(p.to_vector(), Vector4::new(0.0, 0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn rotmat_of_quarter_turn_about_z() {
        let m = quat_to_rotmat(Quat::new(H, 0.0, 0.0, H)).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(m, expected, epsilon = 1e-9);
        assert_eq!(quat_to_rotmat(Quat::IDENTITY).unwrap(), Matrix3::identity());
    }

    #[test]
    fn rotmat_rejects_non_unit() {
        assert!(matches!(
            quat_to_rotmat(Quat::new(2.0, 0.0, 0.0, 0.0)),
            Err(GeometryError::NonUnitQuaternion(_))
        ));
    }

    #[test]
    fn rotmat_roundtrip() {
        for (axis, angle) in [
            (Vector3::new(0.0, 0.0, 1.0), 0.3),
            (Vector3::new(1.0, 1.0, 0.0), 3.1),
            (Vector3::new(-1.0, 0.2, 0.7), 2.0),
            (Vector3::new(0.0, 1.0, 0.0), std::f64::consts::PI),
        ] {
            let m = Quat::from_axis_angle(&axis, angle).to_rotmat().unwrap();
            let back = Quat::from_rotmat(&m).to_rotmat().unwrap();
            assert_relative_eq!(m, back, epsilon = 1e-9);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(m * m.transpose(), Matrix3::identity(), epsilon = 1e-9);
        }
    }

    #[test]
    fn skew_examples() {
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
        let v = Vector3::new(0.0, 2.0, 0.0);
        assert_eq!(skew(&v) * Vector3::new(0.0, 0.0, 1.0), Vector3::new(2.0, 0.0, 0.0));
        assert_eq!(skew(&v) * v, Vector3::zeros());
        let w = Vector3::new(0.3, -1.2, 4.0);
        assert_eq!(skew(&w), -skew(&w).transpose());
    }

    #[test]
    fn left_right_matrices_match_product() {
        let a = Quat::new(0.1, -0.7, 0.3, 0.2);
        let b = Quat::new(-0.4, 0.5, 0.9, -0.3);
        let ab = quat_mul(a, b).to_vector();
        assert_relative_eq!(a.left_matrix() * b.to_vector(), ab, epsilon = 1e-14);
        assert_relative_eq!(b.right_matrix() * a.to_vector(), ab, epsilon = 1e-14);
    }

    #[test]
    fn double_cover_distance() {
        let q = Quat::from_axis_angle(&Vector3::x(), 0.4);
        assert_eq!(q.sign_invariant_distance(-q), 0.0);
        assert_relative_eq!(q.angle_to(-q), 0.0, epsilon = 1e-7);
    }
}
