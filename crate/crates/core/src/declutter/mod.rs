//! Declutter graph: from a segmentation mask to a removal order.
//!
//! Objects are related by box overlap or contour proximity; a tree rooted at
//! the target is grown breadth-first and its leaves are removed first, by
//! grasping when the grasp quality allows and by pushing otherwise.

mod graph;
mod mask;
mod plan;
pub mod planar;

pub use graph::{
    attribute_actions, build_graph, extract_detections, next_object, relation_weight, remove_and_update, ActionKind,
    DeclutterGraph, Detection, Edge, GraspPose, NextObject, WeightBranch, UNREACHABLE_WEIGHT,
};
pub use mask::{trace_outer_boundary, RleMask, SegMask};
pub use plan::{plan_grasp, plan_push, push_direction, DiscardZone, GraspPlan, PixelLift, Plan, PushPlan, PUSH_DISTANCE};
pub use planar::{iou, min_contour_distance, RotatedRect};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DeclutterError {
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("mask is empty")]
    EmptyMask,
    #[error("no detections")]
    NoDetections,
    #[error("target {0} not among the detections")]
    TargetMissing(u32),
    #[error("vertex {0} is not a leaf")]
    NotALeaf(u32),
    #[error("the target cannot be removed")]
    RootRemoval,
    #[error("unknown object {0}")]
    UnknownVertex(u32),
    #[error("object {0} has no grasp pose")]
    MissingGraspPose(u32),
    #[error("no depth at the grasp pixel of object {0}")]
    LiftFailed(u32),
    #[error("discard zone is full")]
    ZoneFull,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Thresholds of the relation and action rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeclutterParams {
    /// Minimum box IoU for an overlap relation.
    pub mu_o: f64,
    /// Maximum contour distance for a proximity relation, as a fraction of
    /// the image diagonal.
    pub mu_d: f64,
    /// Minimum grasp quality for a grasp action.
    pub mu_q: f64,
}

impl Default for DeclutterParams {
    fn default() -> Self {
        Self { mu_o: 0.05, mu_d: 0.5, mu_q: 0.1 }
    }
}
