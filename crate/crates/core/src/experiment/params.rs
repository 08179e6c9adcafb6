//! Pipeline parameters and `key=value` overrides.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ExperimentError;
use crate::declutter::DeclutterParams;
use crate::nbt::StopCriterion;
use crate::nbv::SensorModel;
use crate::tiqf::TiqfParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisionParams {
    /// Fixed first camera position (m).
    pub home_view: [f64; 3],
    /// Rendering camera.
    pub camera: SensorModel,
    /// Ray fan used to score candidate views.
    pub planning_sensor: SensorModel,
    pub grid_margin: f64,
    pub grid_resolution: f64,
    pub candidates: usize,
    pub radius: f64,
    /// Total views including the first.
    pub view_budget: usize,
    /// Yaw hypotheses tried for the first registration.
    pub yaw_hypotheses: usize,
    /// Segmented points closer than this to the table are dropped (m).
    pub table_margin: f64,
}

impl Default for VisionParams {
    fn default() -> Self {
        Self {
            home_view: [-0.35, 0.0, 0.4],
            camera: SensorModel { ray_cols: 160, ray_rows: 120, ..SensorModel::default() },
            planning_sensor: SensorModel::default(),
            grid_margin: 0.15,
            grid_resolution: 0.005,
            candidates: 32,
            radius: 0.5,
            view_budget: 5,
            yaw_hypotheses: 8,
            table_margin: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TactileParams {
    pub per_face: usize,
    pub standoff: f64,
    /// Total touches including the bootstrap.
    pub touch_budget: usize,
    pub bootstrap: usize,
    /// Covariance scale of the rotation prior placed on the incoming
    /// estimate; smaller trusts the visual estimate more.
    pub prior_scale: f64,
    /// Contact RMS residual (m) above which the registration is retried
    /// from yaw alternatives about the vertical axis.
    pub reinit_residual: f64,
    /// A miss contradicts a pose only if rays offset sideways by this
    /// much would also have hit (m).
    pub miss_margin: f64,
    /// Yaw alternatives tried on re-initialisation, including the original.
    pub reinit_yaws: usize,
    /// Translation offset (m) of the shifted starts tried on
    /// re-initialisation, one per axis direction; zero disables them.
    pub reinit_shift: f64,
    /// Touch candidates whose rays shifted sideways by this much still hit
    /// the estimate are preferred (m); zero disables the preference.
    pub robust_margin: f64,
    /// Registration settings for contact sets; sparse closest-point
    /// matching converges slowly, so the thresholds are tighter.
    pub tiqf: TiqfParams,
}

impl Default for TactileParams {
    fn default() -> Self {
        Self {
            per_face: 20,
            standoff: 0.05,
            touch_budget: 10,
            bootstrap: 3,
            prior_scale: 0.01,
            reinit_residual: 0.002,
            reinit_yaws: 4,
            reinit_shift: 0.015,
            robust_margin: 0.01,
            miss_margin: 0.004,
            tiqf: TiqfParams { conv_trans: 1e-6, conv_rot: 1e-3, max_iterations: 1000, ..TiqfParams::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeclutterRunParams {
    pub rules: DeclutterParams,
    pub camera: SensorModel,
    pub camera_height: f64,
    pub action_budget: usize,
    /// Physical gripper length projected into the image for push planning (m).
    pub gripper_length: f64,
    pub push_samples: usize,
    pub discard_slots: usize,
}

impl Default for DeclutterRunParams {
    fn default() -> Self {
        Self {
            rules: DeclutterParams::default(),
            camera: SensorModel { ray_cols: 320, ray_rows: 240, ..SensorModel::default() },
            camera_height: 0.7,
            action_budget: 10,
            gripper_length: 0.04,
            push_samples: 16,
            discard_slots: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub tiqf: TiqfParams,
    pub vision: VisionParams,
    pub tactile: TactileParams,
    pub declutter: DeclutterRunParams,
    pub stop: StopCriterion,
    /// Model points used by the ADI metric.
    pub metric_points: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            tiqf: TiqfParams::default(),
            vision: VisionParams::default(),
            tactile: TactileParams::default(),
            declutter: DeclutterRunParams::default(),
            stop: StopCriterion::default(),
            metric_points: 20000,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| Err(ExperimentError::Config(m));
        self.tiqf.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if !(self.tactile.prior_scale > 0.0) {
            return cfg("tactile.prior_scale must be positive".into());
        }
        self.tactile.tiqf.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        for s in [&self.vision.camera, &self.vision.planning_sensor, &self.declutter.camera] {
            s.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        if self.vision.view_budget == 0 || self.vision.candidates == 0 {
            return cfg("vision.view_budget and vision.candidates must be at least 1".into());
        }
        if !(self.vision.grid_resolution > 0.0 && self.vision.grid_margin > 0.0 && self.vision.radius > 0.0) {
            return cfg("vision grid and radius must be positive".into());
        }
        if self.tactile.per_face == 0 || !(self.tactile.standoff > 0.0) {
            return cfg("tactile.per_face and tactile.standoff must be positive".into());
        }
        if self.tactile.bootstrap < crate::nbt::RECENT_CONTACTS + 1 {
            return cfg("tactile.bootstrap must be at least 3".into());
        }
        if !(self.stop.trans_thresh > 0.0 && self.stop.rot_thresh > 0.0) {
            return cfg("stop thresholds must be positive".into());
        }
        if self.metric_points == 0 {
            return cfg("metric_points must be at least 1".into());
        }
        Ok(())
    }

    /// Applies `key=value` overrides; keys are dotted paths into the
    /// parameter tree (e.g. `tiqf.rho=0.1`) and values are parsed as JSON,
    /// falling back to a string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ExperimentError> {
        let mut tree = serde_json::to_value(self).expect("params serialise");
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("override `{o}` is not key=value")))?;
            let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut tree;
            for part in key.split('.') {
                node = node
                    .get_mut(part)
                    .ok_or_else(|| ExperimentError::Config(format!("unknown parameter `{key}`")))?;
            }
            *node = value;
        }
        let out: Self = serde_json::from_value(tree).map_err(|e| ExperimentError::Config(e.to_string()))?;
        out.validate()?;
        Ok(out)
    }
}
