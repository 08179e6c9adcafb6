//! Depth and label rendering, guarded touches.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{mix_seed, Scene};
use crate::declutter::{PixelLift, SegMask};
use crate::geometry::{ray_mesh_intersect, PointCloud, Ray};
use crate::nbt::TouchAction;
use crate::nbv::{SensorModel, Viewpoint};

/// Label of the table in id images and contacts.
pub const TABLE_ID: u32 = 0;
/// Fraction of target depth returns dropped in degraded-depth scenes.
pub const DEGRADED_DROP: f64 = 0.8;

/// One rendered view: a depth return and an object label per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub view: Viewpoint,
    pub sensor: SensorModel,
    /// Row-major; `None` where the ray found nothing within range or the
    /// return was dropped.
    pub points: Vec<Option<Vector3<f64>>>,
    /// Row-major object ids, [`TABLE_ID`] for table or nothing.
    pub ids: Vec<u32>,
}

impl DepthImage {
    pub fn cols(&self) -> usize {
        self.sensor.ray_cols
    }

    pub fn rows(&self) -> usize {
        self.sensor.ray_rows
    }

    /// Every depth return.
    pub fn cloud(&self) -> PointCloud {
        PointCloud::new(self.points.iter().flatten().copied().collect()).expect("rendered points are finite")
    }

    pub fn mask(&self) -> SegMask {
        SegMask::new(self.cols(), self.rows(), self.ids.clone()).expect("id image matches sensor size")
    }

    pub fn pixel_count(&self, id: u32) -> usize {
        self.ids.iter().filter(|&&i| i == id).count()
    }

    /// Returns labelled `id` after growing its mask by `bleed_px` pixels
    /// (square neighbourhood), dropping points within `table_margin` of the
    /// table plane.
    pub fn segmented_cloud(&self, id: u32, bleed_px: usize, table_height: f64, table_margin: f64) -> PointCloud {
        let (w, h) = (self.cols() as i64, self.rows() as i64);
        let b = bleed_px as i64;
        let mut pts = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                let Some(p) = self.points[i] else { continue };
                let labelled = (-b..=b).any(|dy| {
                    (-b..=b).any(|dx| {
                        let (nx, ny) = (x + dx, y + dy);
                        nx >= 0 && ny >= 0 && nx < w && ny < h && self.ids[(ny * w + nx) as usize] == id
                    })
                });
                if labelled && p.z > table_height + table_margin {
                    pts.push(p);
                }
            }
        }
        PointCloud::new(pts).expect("rendered points are finite")
    }
}

impl PixelLift for DepthImage {
    fn lift(&self, pixel: &Vector2<f64>) -> Option<Vector3<f64>> {
        if pixel.x < 0.0 || pixel.y < 0.0 {
            return None;
        }
        let (x, y) = (pixel.x.floor() as usize, pixel.y.floor() as usize);
        if x >= self.cols() || y >= self.rows() {
            return None;
        }
        self.points[y * self.cols() + x]
    }

    fn lift_direction(&self, d: &Vector2<f64>) -> Option<Vector3<f64>> {
        let w = self.view.rotation_matrix() * Vector3::new(d.x, d.y, 0.0);
        let planar = Vector3::new(w.x, w.y, 0.0);
        (planar.norm() > 1e-9).then(|| planar.normalize())
    }
}

/// Nearest hit over scene objects and the table plane: `(distance, id)`.
pub(crate) fn first_hit(scene: &Scene, ray: &Ray, only: Option<u32>, with_table: bool) -> Option<(f64, u32)> {
    let mut best: Option<(f64, u32)> = None;
    for o in scene.objects() {
        if only.is_some_and(|id| id != o.id) {
            continue;
        }
        let Some((enter, _)) = o.bounds().expanded(1e-6).ray_interval(ray) else { continue };
        if best.is_some_and(|(t, _)| enter > t) {
            continue;
        }
        if let Some((_, t)) = ray_mesh_intersect(ray, &o.mesh, &o.pose) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, o.id));
            }
        }
    }
    if with_table && ray.direction.z < -1e-12 {
        let t = (scene.table_height - ray.origin.z) / ray.direction.z;
        if t > 0.0 && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, TABLE_ID));
        }
    }
    best
}

/// Renders one view: per pixel the nearest surface within `d_ray`, pushed
/// along the ray by a per-view bias and per-pixel Gaussian noise.
pub fn render_depth(scene: &Scene, view: &Viewpoint, sensor: &SensorModel, seed: u64) -> DepthImage {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(scene.noise.seed, seed));
    let noise = Normal::new(0.0, scene.noise.depth_sigma).expect("sigma validated");
    let bias = Normal::new(0.0, scene.noise.depth_bias_sigma).expect("sigma validated").sample(&mut rng);
    let target = scene.target().id;
    let rays = view.rays(sensor);
    let mut points = Vec::with_capacity(rays.len());
    let mut ids = Vec::with_capacity(rays.len());
    for ray in &rays {
        let hit = first_hit(scene, ray, None, true).filter(|(t, _)| *t <= sensor.d_ray);
        let n = noise.sample(&mut rng);
        let drop: f64 = rng.random();
        match hit {
            Some((t, id)) => {
                ids.push(id);
                let dropped = scene.degraded_depth && id == target && drop < DEGRADED_DROP;
                points.push((!dropped).then(|| ray.at(t + bias + n)));
            }
            None => {
                ids.push(TABLE_ID);
                points.push(None);
            }
        }
    }
    DepthImage { view: view.clone(), sensor: sensor.clone(), points, ids }
}

/// Pixels object `id` would cover in `view` with every other object absent.
pub fn unoccluded_pixel_count(scene: &Scene, id: u32, view: &Viewpoint, sensor: &SensorModel) -> usize {
    view.rays(sensor)
        .iter()
        .filter(|r| first_hit(scene, r, Some(id), false).is_some_and(|(t, _)| t <= sensor.d_ray))
        .count()
}

/// Result of a guarded touch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub point: Vector3<f64>,
    /// Object touched, [`TABLE_ID`] for the table.
    pub id: u32,
}

/// Moves along the action ray until the first contact with any object or
/// the table; the contact point gets isotropic Gaussian noise.
pub fn simulate_touch(scene: &Scene, action: &TouchAction, seed: u64) -> Option<Contact> {
    let (t, id) = first_hit(scene, &action.ray, None, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(scene.noise.seed ^ 0x7417, seed));
    let noise = Normal::new(0.0, scene.noise.touch_sigma).expect("sigma validated");
    let jitter = Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
    Some(Contact { point: action.ray.at(t) + jitter, id })
}
