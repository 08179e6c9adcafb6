//! Translation-invariant quaternion filter (TIQF).
//!
//! Rotation is estimated by a sequential Kalman filter on the unit
//! quaternion, fed with pseudo-measurements built from pairs of
//! correspondences (differences cancel the translation). Translation is then
//! recovered in closed form. The outer loop recomputes nearest-neighbour
//! correspondences until the pose stops changing. The same code serves dense
//! depth clouds and sparse tactile contacts.

mod correspondence;
mod filter;
mod register;

pub use correspondence::{find_correspondences, form_pairs, match_to_model, CorrespondencePair, Match};
pub use filter::{build_pseudo_measurement, kalman_update, measurement_noise};
pub use register::{
    estimate_translation, register, register_matched, register_to_surface, register_to_surface_with_prior, Registration, RegistrationReport, Tiqf,
    MIN_SCENE_POINTS,
};

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, Quat};

#[derive(Debug, thiserror::Error)]
pub enum TiqfError {
    #[error("degenerate correspondence pair (relative vector shorter than 1e-9)")]
    DegeneratePair,
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("insufficient data: {usable} usable matches, need at least {required}")]
    InsufficientData { usable: usize, required: usize },
    #[error("scene and model counts differ ({scene} vs {model})")]
    CountMismatch { scene: usize, model: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Gaussian belief over the rotation quaternion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl FilterState {
    /// Mean at `rotation`, isotropic covariance `scale · I₄`.
    pub fn initial(rotation: Quat, scale: f64) -> Self {
        Self { mean: rotation.to_vector(), covariance: Matrix4::identity() * scale }
    }

    pub fn rotation(&self) -> Quat {
        Quat::from_vector(&self.mean).normalized().unwrap_or(Quat::IDENTITY)
    }

    pub fn covariance_trace(&self) -> f64 {
        self.covariance.trace()
    }

    pub fn min_covariance_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.covariance).eigenvalues.min()
    }
}

/// How scene matches are grouped into translation-invariant pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// All pairs for sparse inputs (at most [`SPARSE_LIMIT`] points),
    /// consecutive permutation pairs otherwise.
    #[default]
    Auto,
    Permutation,
    AllPairs,
}

/// Inputs with at most this many points are treated as tactile (sparse).
pub const SPARSE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TiqfParams {
    /// Correspondence uncertainty constant.
    pub rho: f64,
    /// Convergence threshold on translation change between iterations (m).
    pub conv_trans: f64,
    /// Convergence threshold on rotation change between iterations (deg).
    pub conv_rot: f64,
    pub max_iterations: usize,
    pub max_pairs_per_iter: usize,
    pub init_covariance_scale: f64,
    /// Points sampled from the model mesh to form the model cloud.
    pub model_points: usize,
    pub pairing: PairingMode,
    /// Re-initialise the covariance at the start of every outer iteration
    /// (the mean is always carried over).
    pub reset_covariance: bool,
    pub seed: u64,
}

impl Default for TiqfParams {
    fn default() -> Self {
        Self {
            rho: 0.05,
            conv_trans: 1e-4,
            conv_rot: 0.1,
            max_iterations: 100,
            max_pairs_per_iter: 500,
            init_covariance_scale: 0.5,
            model_points: 2000,
            pairing: PairingMode::Auto,
            reset_covariance: true,
            seed: 0,
        }
    }
}

impl TiqfParams {
    pub fn validate(&self) -> Result<(), TiqfError> {
        let bad = |m: &str| Err(TiqfError::InvalidParams(m.into()));
        if !(self.rho > 0.0) {
            return bad("rho must be positive");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if self.max_pairs_per_iter < 1 {
            return bad("max_pairs_per_iter must be at least 1");
        }
        if !(self.init_covariance_scale > 0.0) {
            return bad("init_covariance_scale must be positive");
        }
        if self.model_points < 1 {
            return bad("model_points must be at least 1");
        }
        if !(self.conv_trans >= 0.0 && self.conv_rot >= 0.0) {
            return bad("convergence thresholds must be non-negative");
        }
        Ok(())
    }
}
