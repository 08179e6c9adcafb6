//! Point clouds and the whitespace-separated XYZ text format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self, GeometryError> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinitePoint(i));
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vector3<f64>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends a point; non-finite points are rejected.
    pub fn push(&mut self, p: Vector3<f64>) -> Result<(), GeometryError> {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinitePoint(self.points.len()));
        }
        self.points.push(p);
        Ok(())
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }

    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud { points: self.points.iter().map(|p| pose.transform_point(p)).collect() }
    }

    pub fn parse_xyz(text: &str) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            match vals {
                Ok(v) if v.len() == 3 => points.push(Vector3::new(v[0], v[1], v[2])),
                _ => {
                    return Err(GeometryError::Parse {
                        line: lineno + 1,
                        message: format!("expected three numbers, got `{line}`"),
                    })
                }
            }
        }
        Self::new(points)
    }

    pub fn to_xyz(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 32);
        for p in &self.points {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
        }
        out
    }

    pub fn read_xyz(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        Self::parse_xyz(&std::fs::read_to_string(path)?)
    }

    pub fn write_xyz(&self, path: impl AsRef<Path>) -> Result<(), GeometryError> {
        std::fs::write(path, self.to_xyz())?;
        Ok(())
    }
}

impl From<PointCloud> for Vec<Vector3<f64>> {
    fn from(c: PointCloud) -> Self {
        c.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let e = PointCloud::new(vec![Vector3::zeros(), Vector3::new(f64::NAN, 0.0, 0.0)]);
        assert!(matches!(e, Err(GeometryError::NonFinitePoint(1))));
    }

    #[test]
    fn xyz_text_roundtrip_is_exact() {
        let c = PointCloud::new(vec![Vector3::new(0.1, -2.5e-3, 3.0), Vector3::new(1e-17, 4.0, -0.3)]).unwrap();
        assert_eq!(PointCloud::parse_xyz(&c.to_xyz()).unwrap(), c);
    }

    #[test]
    fn xyz_parse_skips_comments_and_reports_bad_lines() {
        let c = PointCloud::parse_xyz("# header\n1 2 3\n\n4 5 6\n").unwrap();
        assert_eq!(c.len(), 2);
        let e = PointCloud::parse_xyz("1 2\n").unwrap_err();
        assert!(matches!(e, GeometryError::Parse { line: 1, .. }));
    }
}
