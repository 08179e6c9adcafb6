//! Push and grasp action plans.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::Detection;
use super::mask::SegMask;
use super::planar::{iou, Point2, RotatedRect};
use super::DeclutterError;
use crate::geometry::Aabb;

/// Default push length (m).
pub const PUSH_DISTANCE: f64 = 0.05;

/// Maps image pixels to 3D points on the visible surface.
pub trait PixelLift {
    fn lift(&self, pixel: &Point2) -> Option<Vector3<f64>>;

    /// Image-plane direction as a unit direction on the table plane.
    fn lift_direction(&self, _direction: &Vector2<f64>) -> Option<Vector3<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushPlan {
    pub object: u32,
    /// Contact point on the object's contour (px).
    pub point_px: Point2,
    /// Contact point lifted to 3D (m), once a depth source is available.
    pub point_world: Option<Vector3<f64>>,
    /// Unit push direction in the image plane.
    pub direction: Vector2<f64>,
    /// Push direction on the table plane, once lifted.
    pub direction_world: Option<Vector3<f64>>,
    /// Metres.
    pub distance: f64,
}

impl PushPlan {
    pub fn lifted(mut self, lifter: &dyn PixelLift) -> Self {
        self.point_world = lifter.lift(&self.point_px);
        self.direction_world = lifter.lift_direction(&self.direction);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    pub object: u32,
    pub point: Vector3<f64>,
    /// Radians.
    pub angle: f64,
    pub place: Vector3<f64>,
}

/// Serialised form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Plan {
    Push(PushPlan),
    Grasp(GraspPlan),
}

/// Fixed drop-off slots for grasped objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardZone {
    pub bounds: Aabb,
    pub slots: Vec<Vector3<f64>>,
    pub used: usize,
}

impl DiscardZone {
    /// `count` slots spaced `spacing` apart along +x from `start`.
    pub fn row(start: Vector3<f64>, spacing: f64, count: usize) -> Self {
        let slots: Vec<_> = (0..count).map(|i| start + Vector3::x() * spacing * i as f64).collect();
        let bounds = Aabb::from_points(slots.iter())
            .unwrap_or(Aabb::new(start, start))
            .expanded(spacing.abs().max(1e-3) / 2.0);
        Self { bounds, slots, used: 0 }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.bounds.contains(p)
    }

    pub fn next_slot(&mut self) -> Result<Vector3<f64>, DeclutterError> {
        let slot = *self.slots.get(self.used).ok_or(DeclutterError::ZoneFull)?;
        self.used += 1;
        Ok(slot)
    }
}

/// Push direction away from the other objects: `d = −v/‖v‖` with
/// `v = Σ (c_i − c_k)/‖c_i − c_k‖`. Falls back to `+x` when `v` vanishes.
pub fn push_direction(target: &Point2, others: &[Point2]) -> Vector2<f64> {
    let v: Vector2<f64> = others
        .iter()
        .map(|c| c - target)
        .filter(|d| d.norm() > 1e-12)
        .map(|d| d * (1.0 / d.norm()))
        .sum();
    if v.norm() < 1e-12 { Vector2::x() } else { -v.normalize() }
}

fn closest_on_contour(p: &Point2, contour: &[Point2]) -> Point2 {
    let mut best = contour[0];
    let mut best_d = f64::INFINITY;
    for i in 0..contour.len() {
        let (a, b) = (contour[i], contour[(i + 1) % contour.len()]);
        let ab = b - a;
        let l2 = ab.norm_squared();
        let t = if l2 == 0.0 { 0.0 } else { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) };
        let q = a + ab * t;
        let d = (q - p).norm_squared();
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Farthest crossing of the ray `origin + s·dir` with the contour, or the
/// contour vertex nearest to the ray when it never crosses.
fn ray_contour_exit(origin: &Point2, dir: &Vector2<f64>, contour: &[Point2]) -> Point2 {
    let mut best: Option<f64> = None;
    for i in 0..contour.len() {
        let (a, b) = (contour[i], contour[(i + 1) % contour.len()]);
        let e = b - a;
        let denom = dir.perp(&e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let w = a - origin;
        let s = w.perp(&e) / denom;
        let u = w.perp(dir) / denom;
        if s >= 0.0 && (0.0..=1.0).contains(&u) && best.is_none_or(|b| s > b) {
            best = Some(s);
        }
    }
    match best {
        Some(s) => origin + dir * s,
        None => *contour
            .iter()
            .min_by(|p, q| {
                let dist = |x: &Point2| {
                    let s = (x - origin).dot(dir).max(0.0);
                    (origin + dir * s - x).norm()
                };
                dist(p).total_cmp(&dist(q))
            })
            .unwrap(),
    }
}

/// Plans a push of object `id` away from its neighbours. The contact point
/// is the contour point behind the centroid, refined among `n_samples`
/// contour points within `1.5 · gripper_px` to minimise the mean IoU of the
/// gripper footprint with the other objects' boxes (ties to the nearest).
pub fn plan_push(
    mask: &SegMask,
    id: u32,
    detections: &[Detection],
    gripper_px: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PushPlan, DeclutterError> {
    let target = detections
        .iter()
        .find(|d| d.id == id)
        .filter(|_| mask.ids().contains(&id))
        .ok_or(DeclutterError::UnknownVertex(id))?;
    if target.contour.is_empty() {
        return Err(DeclutterError::UnknownVertex(id));
    }
    let others: Vec<&Detection> = detections.iter().filter(|d| d.id != id).collect();
    let centroids: Vec<Point2> = others.iter().map(|d| d.centroid).collect();
    let direction = push_direction(&target.centroid, &centroids);
    let nominal = ray_contour_exit(&target.centroid, &(-direction), &target.contour);

    let footprint = |p: &Point2| RotatedRect {
        center: p - direction * (gripper_px / 2.0),
        size: Point2::new(gripper_px, gripper_px),
        angle: direction.y.atan2(direction.x),
    };
    let score = |p: &Point2| {
        if others.is_empty() {
            return 0.0;
        }
        let g = footprint(p);
        others.iter().map(|d| iou(&g, &d.rect)).sum::<f64>() / others.len() as f64
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = 1.5 * gripper_px;
    let mut best = (score(&nominal), 0.0, nominal);
    for _ in 0..n_samples {
        let r = radius * rng.random::<f64>().sqrt();
        let a = rng.random::<f64>() * std::f64::consts::TAU;
        let p = closest_on_contour(&(nominal + Point2::new(a.cos(), a.sin()) * r), &target.contour);
        let cand = (score(&p), (p - nominal).norm(), p);
        if cand.0 < best.0 - 1e-12 || ((cand.0 - best.0).abs() <= 1e-12 && cand.1 < best.1) {
            best = cand;
        }
    }
    Ok(PushPlan { object: id, point_px: best.2, point_world: None, direction, direction_world: None, distance: PUSH_DISTANCE })
}

/// Grasp at the provider's pose, lifted to 3D, placed in the next free slot.
pub fn plan_grasp(
    detection: &Detection,
    zone: &mut DiscardZone,
    lifter: &dyn PixelLift,
) -> Result<GraspPlan, DeclutterError> {
    let pose = detection.grasp_pose.ok_or(DeclutterError::MissingGraspPose(detection.id))?;
    let point = lifter.lift(&pose.pixel).ok_or(DeclutterError::LiftFailed(detection.id))?;
    let place = zone.next_slot()?;
    Ok(GraspPlan { object: detection.id, point, angle: pose.angle, place })
}
