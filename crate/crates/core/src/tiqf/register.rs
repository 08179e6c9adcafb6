use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correspondence::{form_pairs, match_to_model, Match};
use super::filter::{build_pseudo_measurement, kalman_update, measurement_noise};
use super::{FilterState, TiqfError, TiqfParams};
use crate::geometry::{sample_mesh_surface, KdTree, PointCloud, Pose, Quat, TriangleMesh};

/// Minimum scene size for a registration.
pub const MIN_SCENE_POINTS: usize = 3;

// Decorrelates the model-sampling stream from the pairing stream.
const MODEL_SEED_SALT: u64 = 0x6d6f_6465_6c00;

/// Closed-form translation `t̂ = 1/N Σ (s_i − R̂ o_i)` for index-matched clouds.
pub fn estimate_translation(rotation: Quat, scene: &PointCloud, model: &PointCloud) -> Result<Vector3<f64>, TiqfError> {
    if scene.len() != model.len() {
        return Err(TiqfError::CountMismatch { scene: scene.len(), model: model.len() });
    }
    if scene.is_empty() {
        return Err(TiqfError::InsufficientData { usable: 0, required: 1 });
    }
    let r = rotation.normalized()?.to_rotmat()?;
    let sum: Vector3<f64> = scene.points().iter().zip(model.points()).map(|(s, o)| s - r * o).sum();
    Ok(sum / scene.len() as f64)
}

fn translation_from_matches(rotation: Quat, matches: &[Match]) -> Vector3<f64> {
    let r = rotation.to_rotmat_unchecked();
    let sum: Vector3<f64> = matches.iter().map(|m| m.scene - r * m.model).sum();
    sum / matches.len() as f64
}

/// Outcome of a registration run.
#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub pose: Pose,
    pub state: FilterState,
    pub iterations: usize,
    pub converged: bool,
    /// Kalman updates skipped because the innovation covariance was singular.
    pub skipped_updates: usize,
}

impl Registration {
    pub fn report(&self) -> RegistrationReport {
        let q = self.pose.rotation;
        RegistrationReport {
            translation: [self.pose.translation.x, self.pose.translation.y, self.pose.translation.z],
            quaternion_wxyz: [q.w, q.x, q.y, q.z],
            covariance_trace: self.state.covariance_trace(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// JSON-facing summary of a [`Registration`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub translation: [f64; 3],
    pub quaternion_wxyz: [f64; 4],
    pub covariance_trace: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Registration engine holding a sampled model cloud and its k-d tree.
#[derive(Debug, Clone)]
pub struct Tiqf {
    model: PointCloud,
    tree: KdTree,
    params: TiqfParams,
}

impl Tiqf {
    pub fn new(model: &TriangleMesh, params: TiqfParams) -> Result<Self, TiqfError> {
        params.validate()?;
        let cloud = sample_mesh_surface(model, params.model_points, params.seed ^ MODEL_SEED_SALT)?;
        Self::from_cloud(cloud, params)
    }

    pub fn from_cloud(model: PointCloud, params: TiqfParams) -> Result<Self, TiqfError> {
        params.validate()?;
        let tree = KdTree::from_cloud(&model)?;
        Ok(Self { model, tree, params })
    }

    pub fn params(&self) -> &TiqfParams {
        &self.params
    }

    pub fn model_cloud(&self) -> &PointCloud {
        &self.model
    }

    /// Initial pose when no prior is given: identity rotation, model centroid
    /// moved onto the scene centroid.
    pub fn centroid_alignment(&self, scene: &PointCloud) -> Pose {
        let sc = scene.centroid().unwrap_or_else(Vector3::zeros);
        let mc = self.model.centroid().unwrap_or_else(Vector3::zeros);
        Pose::from_translation(sc - mc)
    }

    /// Full TIQF loop with nearest-neighbour correspondences.
    pub fn register(&self, scene: &PointCloud, init: Option<Pose>) -> Result<Registration, TiqfError> {
        let init = init.unwrap_or_else(|| self.centroid_alignment(scene));
        let belief = FilterState::initial(init.rotation, self.params.init_covariance_scale);
        self.register_with_belief(scene, init, belief)
    }

    /// As [`Self::register`], starting from an explicit rotation belief.
    pub fn register_with_belief(
        &self,
        scene: &PointCloud,
        init: Pose,
        belief: FilterState,
    ) -> Result<Registration, TiqfError> {
        if scene.len() < MIN_SCENE_POINTS {
            return Err(TiqfError::InsufficientData { usable: scene.len(), required: MIN_SCENE_POINTS });
        }
        let tree = &self.tree;
        run_loop(&self.params, init, belief, None, |pose| match_to_model(scene.points(), tree, pose))
    }
}

/// Registers `scene` against `model` (sampled to `params.model_points`).
/// Without `init` the centroids are aligned and the rotation starts at identity.
pub fn register(
    scene: &PointCloud,
    model: &TriangleMesh,
    init: Option<Pose>,
    params: &TiqfParams,
) -> Result<Registration, TiqfError> {
    Tiqf::new(model, params.clone())?.register(scene, init)
}

/// TIQF matching each scene point to the exact closest point on `mesh`
/// instead of a sampled model cloud. Intended for sparse contact sets.
pub fn register_to_surface(
    scene: &PointCloud,
    mesh: &TriangleMesh,
    init: Pose,
    params: &TiqfParams,
) -> Result<Registration, TiqfError> {
    let belief = FilterState::initial(init.rotation, params.init_covariance_scale);
    surface_loop(scene, mesh, init, belief, None, params)
}

/// As [`register_to_surface`], but every iteration starts from `prior`, so
/// the rotation stays near the prior mean until the contacts pin it down.
pub fn register_to_surface_with_prior(
    scene: &PointCloud,
    mesh: &TriangleMesh,
    init: Pose,
    prior: &FilterState,
    params: &TiqfParams,
) -> Result<Registration, TiqfError> {
    surface_loop(scene, mesh, init, prior.clone(), Some(prior), params)
}

fn surface_loop(
    scene: &PointCloud,
    mesh: &TriangleMesh,
    init: Pose,
    belief: FilterState,
    anchor: Option<&FilterState>,
    params: &TiqfParams,
) -> Result<Registration, TiqfError> {
    params.validate()?;
    if scene.len() < MIN_SCENE_POINTS {
        return Err(TiqfError::InsufficientData { usable: scene.len(), required: MIN_SCENE_POINTS });
    }
    run_loop(params, init, belief, anchor, |pose| {
        let inv = pose.inverse();
        scene
            .points()
            .iter()
            .map(|s| {
                let o = mesh.closest_point(&inv.transform_point(s));
                Match { scene: *s, model: o, distance: (pose.transform_point(&o) - s).norm() }
            })
            .collect()
    })
}

/// TIQF with fixed, index-matched correspondences (`scene[i] ↔ model[i]`).
pub fn register_matched(
    scene: &PointCloud,
    model: &PointCloud,
    init: Option<Pose>,
    params: &TiqfParams,
) -> Result<Registration, TiqfError> {
    params.validate()?;
    if scene.len() != model.len() {
        return Err(TiqfError::CountMismatch { scene: scene.len(), model: model.len() });
    }
    if scene.len() < MIN_SCENE_POINTS {
        return Err(TiqfError::InsufficientData { usable: scene.len(), required: MIN_SCENE_POINTS });
    }
    let init = init.unwrap_or_else(|| {
        Pose::from_translation(scene.centroid().unwrap() - model.centroid().unwrap())
    });
    let belief = FilterState::initial(init.rotation, params.init_covariance_scale);
    run_loop(params, init, belief, None, |pose| {
        scene
            .points()
            .iter()
            .zip(model.points())
            .map(|(s, o)| Match { scene: *s, model: *o, distance: (pose.transform_point(o) - s).norm() })
            .collect()
    })
}

/// With `anchor`, every outer iteration restarts from that belief instead
/// of carrying the mean over, giving the posterior of the anchor under the
/// current correspondences.
fn run_loop(
    params: &TiqfParams,
    init: Pose,
    mut state: FilterState,
    anchor: Option<&FilterState>,
    mut correspond: impl FnMut(&Pose) -> Vec<Match>,
) -> Result<Registration, TiqfError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pose = init;
    let mut skipped = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        let matches = correspond(&pose);
        if let Some(a) = anchor {
            state = a.clone();
        } else if params.reset_covariance {
            state.covariance = FilterState::initial(Quat::IDENTITY, params.init_covariance_scale).covariance;
        }
        let pairs = form_pairs(&matches, params.pairing, params.max_pairs_per_iter, &mut rng)?;
        for pair in &pairs {
            let h = build_pseudo_measurement(pair);
            let noise = measurement_noise(&state, params.rho);
            match kalman_update(&state, &h, &noise) {
                Ok(next) => state = next,
                Err(TiqfError::SingularInnovation) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        let rotation = state.rotation();
        let next = Pose { rotation, translation: translation_from_matches(rotation, &matches) };
        let (dt, dr) = next.delta(&pose);
        pose = next;
        if dt < params.conv_trans && dr < params.conv_rot {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("TIQF stopped after {iterations} iterations without converging");
    }
    Ok(Registration { pose, state, iterations, converged, skipped_updates: skipped })
}
