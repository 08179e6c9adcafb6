//! Pinhole ray fan and look-at viewpoints.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::NbvError;
use crate::geometry::{Pose, Quat, Ray};

/// Ray fan of a depth sensor. Rays leave along the camera `+z` axis, `x` to
/// the right of the image and `y` down it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub ray_cols: usize,
    pub ray_rows: usize,
    /// Maximum ray length (m).
    pub d_ray: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { hfov_deg: 60.0, vfov_deg: 45.0, ray_cols: 64, ray_rows: 48, d_ray: 1.5 }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), NbvError> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.hfov_deg) || !fov_ok(self.vfov_deg) {
            return Err(NbvError::InvalidSensor("field of view must lie in (0, 180) degrees".into()));
        }
        if self.ray_cols == 0 || self.ray_rows == 0 {
            return Err(NbvError::InvalidSensor("ray counts must be at least 1".into()));
        }
        if !(self.d_ray > 0.0) {
            return Err(NbvError::InvalidSensor("d_ray must be positive".into()));
        }
        Ok(())
    }

    pub fn ray_count(&self) -> usize {
        self.ray_cols * self.ray_rows
    }

    /// Unit direction of pixel `(col, row)` in the camera frame.
    pub fn pixel_direction(&self, col: usize, row: usize) -> Vector3<f64> {
        let tx = (self.hfov_deg.to_radians() / 2.0).tan();
        let ty = (self.vfov_deg.to_radians() / 2.0).tan();
        let u = (col as f64 + 0.5) / self.ray_cols as f64 * 2.0 - 1.0;
        let v = (row as f64 + 0.5) / self.ray_rows as f64 * 2.0 - 1.0;
        Vector3::new(u * tx, v * ty, 1.0).normalize()
    }

    /// Camera-frame directions in row-major pixel order.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        (0..self.ray_rows)
            .flat_map(|r| (0..self.ray_cols).map(move |c| (c, r)))
            .map(|(c, r)| self.pixel_direction(c, r))
            .collect()
    }
}

/// Axis `ê` and angle `θ` of a view at `p_view` looking at `centroid`:
/// `ĥ = (p_view − c)/‖·‖`, `θ = acos(ĥ·Ẑ)`, `ê = ĥ×Ẑ/‖·‖`. When `ĥ ∥ Ẑ` the
/// axis is `(1, 0, 0)`.
pub fn view_axis_angle(p_view: &Vector3<f64>, centroid: &Vector3<f64>) -> Result<(Vector3<f64>, f64), NbvError> {
    let d = p_view - centroid;
    let n = d.norm();
    if !(n > 1e-12) {
        return Err(NbvError::CoincidentPoints);
    }
    let h = d / n;
    let theta = h.z.clamp(-1.0, 1.0).acos();
    let cross = h.cross(&Vector3::z());
    let axis = if cross.norm() > 1e-12 { cross.normalize() } else { Vector3::x() };
    Ok((axis, theta))
}

/// Camera orientation at `p_view` whose boresight points at `centroid`.
pub fn view_orientation(p_view: &Vector3<f64>, centroid: &Vector3<f64>) -> Result<Quat, NbvError> {
    let (axis, theta) = view_axis_angle(p_view, centroid)?;
    let flip = Quat::from_axis_angle(&Vector3::x(), std::f64::consts::PI);
    Ok(Quat::from_axis_angle(&axis, -theta) * flip)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub position: Vector3<f64>,
    pub orientation: Quat,
}

impl Viewpoint {
    pub fn look_at(position: Vector3<f64>, centroid: &Vector3<f64>) -> Result<Self, NbvError> {
        Ok(Self { position, orientation: view_orientation(&position, centroid)? })
    }

    pub fn pose(&self) -> Pose {
        Pose { rotation: self.orientation, translation: self.position }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.orientation.to_rotmat_unchecked()
    }

    pub fn boresight(&self) -> Vector3<f64> {
        self.orientation.rotate(&Vector3::z())
    }

    /// World-frame rays of the sensor fan, row-major.
    pub fn rays(&self, sensor: &SensorModel) -> Vec<Ray> {
        let r = self.rotation_matrix();
        sensor.directions().into_iter().map(|d| Ray::from_unit(self.position, (r * d).normalize())).collect()
    }
}
