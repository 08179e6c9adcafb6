//! Active visuo-tactile pose estimation of a known object in clutter.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`geometry`]: quaternions, poses, meshes, ray casting, nearest neighbours.
//! - [`tiqf`]: the translation-invariant quaternion filter used for both dense
//!   (depth) and sparse (touch) registration.
//! - [`nbv`]: occupancy-grid belief and information-gain view selection.
//! - [`nbt`]: touch candidate generation and KL-divergence touch selection.
//! - [`declutter`]: segmentation-driven declutter graph, push and grasp plans.
//! - [`sim`]: a deterministic scene simulator standing in for the robots,
//!   depth camera and tactile sensors, plus the evaluation metrics.
//! - [`experiment`]: the four ablation pipelines and their reporting.

pub mod geometry;
pub mod tiqf;
pub mod nbv;
pub mod nbt;
pub mod declutter;
pub mod sim;
pub mod experiment;

pub use geometry::{Pose, PointCloud, Quat, Ray, TriangleMesh};
