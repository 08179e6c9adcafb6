//! Pose error metrics.

use serde::{Deserialize, Serialize};

use crate::geometry::{KdTree, PointCloud, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Translation error (m).
    pub err_t: f64,
    /// Rotation error (degrees).
    pub err_r: f64,
    /// Average closest-point distance between the model under both poses (m).
    pub err_adi: f64,
}

/// Translation, rotation and ADI errors of `est` against `gt` over `model`.
pub fn compute_metrics(est: &Pose, gt: &Pose, model: &PointCloud) -> MetricsReport {
    let err_t = (est.translation - gt.translation).norm();
    let r = est.rotation_matrix() * gt.rotation_matrix().transpose();
    let err_r = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
    let err_adi = if model.is_empty() {
        0.0
    } else {
        let moved = model.transformed(est);
        let tree = KdTree::from_cloud(&moved).expect("non-empty cloud");
        model.points().iter().map(|p| tree.nearest(&gt.transform_point(p)).1.sqrt()).sum::<f64>() / model.len() as f64
    };
    MetricsReport { err_t, err_r, err_adi }
}
