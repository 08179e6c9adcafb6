use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Quat};

/// Rigid transform `p ↦ R p + t` with `R` stored as a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quat,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Quat::IDENTITY, translation: Vector3::zeros() }
    }

    /// Builds a pose, renormalizing the rotation. Fails on a zero quaternion.
    pub fn new(rotation: Quat, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        Ok(Self { rotation: rotation.normalized()?, translation })
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self { rotation: Quat::IDENTITY, translation: t }
    }

    pub fn from_parts(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation: Quat::from_rotmat(rotation), translation }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotmat_unchecked()
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(v)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        let rotation = (self.rotation * other.rotation)
            .normalized()
            .unwrap_or(Quat::IDENTITY);
        Pose { rotation, translation: self.transform_point(&other.translation) }
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.conj();
        Pose { rotation: r, translation: -r.rotate(&self.translation) }
    }

    /// `(‖Δt‖, geodesic angle in degrees)` between two poses.
    pub fn delta(&self, other: &Pose) -> (f64, f64) {
        (
            (self.translation - other.translation).norm(),
            self.rotation.angle_to(other.rotation).to_degrees(),
        )
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}
