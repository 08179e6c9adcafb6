//! Deterministic simulator standing in for the robots and sensors.
//!
//! Depth views and label images come from ray casting against the scene
//! meshes and a table plane. Touches stop at the first contact. Pushes are
//! pure planar translations and grasps remove the object. All randomness is
//! seeded.

mod interact;
mod metrics;
mod render;
mod scene;

pub use interact::{apply_grasp_removal, apply_push, grasp_quality_stub, PushOutcome};
pub use metrics::{compute_metrics, MetricsReport};
pub use render::{render_depth, simulate_touch, unoccluded_pixel_count, Contact, DepthImage, DEGRADED_DROP, TABLE_ID};
pub use scene::{generate_scene, GeneratorParams, ObjectConfig, Scene, SceneConfig, SceneObject, ShapeConfig, WorkspaceConfig};

use serde::{Deserialize, Serialize};

use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scene config: {0}")]
    Config(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("unknown object {0}")]
    UnknownObject(u32),
    #[error("the target cannot be removed")]
    TargetRemoval,
    #[error("push plan has no table-plane direction")]
    UnliftedPlan,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sensor noise. Depth returns are shifted along the ray by a bias drawn
/// once per view plus independent per-pixel noise; contacts get isotropic
/// noise. Segmented clouds grow the label mask by `seg_bleed_px`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub depth_sigma: f64,
    pub depth_bias_sigma: f64,
    pub touch_sigma: f64,
    pub seg_bleed_px: usize,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { depth_sigma: 0.002, depth_bias_sigma: 0.004, touch_sigma: 0.001, seg_bleed_px: 1, seed: 0 }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { depth_sigma: 0.0, depth_bias_sigma: 0.0, touch_sigma: 0.0, seg_bleed_px: 0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = |s: f64| s >= 0.0 && s.is_finite();
        if ok(self.depth_sigma) && ok(self.depth_bias_sigma) && ok(self.touch_sigma) {
            Ok(())
        } else {
            Err(SimError::InvalidScene("noise sigmas must be finite and non-negative".into()))
        }
    }
}

/// Combines two seeds into one stream seed (SplitMix64 finaliser).
pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
