//! Scene changes caused by pushes and grasps, and the grasp-quality stub.

use nalgebra::Vector3;

use super::render::{unoccluded_pixel_count, DepthImage};
use super::{Scene, SimError};
use crate::declutter::planar::{min_area_rect, Point2};
use crate::declutter::{GraspPose, PushPlan};

/// Outcome of [`apply_push`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushOutcome {
    pub displacement: Vector3<f64>,
    /// The push would have left the workspace and was cut short.
    pub clamped: bool,
}

/// Quasi-static push: translates object `id` by `distance` along the lifted
/// plan direction on the table plane. Orientation and height are kept;
/// other objects are not moved.
pub fn apply_push(scene: &mut Scene, id: u32, plan: &PushPlan) -> Result<PushOutcome, SimError> {
    let dir = plan.direction_world.ok_or(SimError::UnliftedPlan)?;
    let ws = scene.workspace;
    let obj = scene.object_mut(id).ok_or(SimError::UnknownObject(id))?;
    let planar = Vector3::new(dir.x, dir.y, 0.0);
    let step = if planar.norm() > 0.0 { planar.normalize() * plan.distance } else { Vector3::zeros() };
    let bounds = obj.bounds();
    let mut delta = step;
    let mut clamped = false;
    for k in 0..2 {
        let lo = ws.min[k] - bounds.min[k];
        let hi = ws.max[k] - bounds.max[k];
        let c = delta[k].clamp(lo.min(0.0), hi.max(0.0));
        if c != delta[k] {
            clamped = true;
            delta[k] = c;
        }
    }
    obj.pose.translation += delta;
    Ok(PushOutcome { displacement: delta, clamped })
}

/// Removes a grasped object from the scene.
pub fn apply_grasp_removal(scene: &mut Scene, id: u32) -> Result<(), SimError> {
    match scene.object(id) {
        None => Err(SimError::UnknownObject(id)),
        Some(o) if o.is_target => Err(SimError::TargetRemoval),
        Some(_) => {
            scene.remove_object(id);
            Ok(())
        }
    }
}

/// Grasp quality `base × visible fraction` with a grasp at the visible
/// region's centroid, aligned with its minor axis. Fully occluded objects
/// score zero without a pose.
pub fn grasp_quality_stub(scene: &Scene, id: u32, image: &DepthImage) -> Result<(f64, Option<GraspPose>), SimError> {
    let obj = scene.object(id).ok_or(SimError::UnknownObject(id))?;
    let cols = image.cols();
    let visible: Vec<Point2> = image
        .ids
        .iter()
        .enumerate()
        .filter(|(_, &i)| i == id)
        .map(|(k, _)| Point2::new((k % cols) as f64 + 0.5, (k / cols) as f64 + 0.5))
        .collect();
    if visible.is_empty() {
        return Ok((0.0, None));
    }
    let full = unoccluded_pixel_count(scene, id, &image.view, &image.sensor).max(visible.len());
    let q = obj.base_quality * visible.len() as f64 / full as f64;
    let pixel = visible.iter().sum::<Point2>() / visible.len() as f64;
    let rect = min_area_rect(&visible);
    let minor = if rect.size.x > rect.size.y { rect.angle + std::f64::consts::FRAC_PI_2 } else { rect.angle };
    Ok((q, Some(GraspPose { pixel, angle: minor })))
}
