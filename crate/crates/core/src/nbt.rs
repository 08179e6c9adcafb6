//! Next-best-touch planning.
//!
//! Guarded-touch rays are sampled on the faces of the bounding box of the
//! current estimate. Each predicted contact is folded into a copy of the
//! rotation belief and scored by the KL divergence from the current belief.

use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ray_mesh_intersect, GeometryError, PointCloud, Pose, Ray, TriangleMesh};
use crate::tiqf::{build_pseudo_measurement, kalman_update, measurement_noise, CorrespondencePair, FilterState, TiqfError};

/// Dimension of the quaternion belief.
const BELIEF_DIM: f64 = 4.0;
/// Actual contacts paired with each predicted contact.
pub const RECENT_CONTACTS: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum NbtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bounding box of the estimate has zero extent")]
    DegenerateBox,
    #[error("need at least {required} prior contacts, have {have}")]
    InsufficientContacts { have: usize, required: usize },
    #[error("no candidate action is predicted to make contact; resample with a larger box or standoff")]
    AllMiss,
    #[error("prior covariance is singular")]
    SingularPrior,
    #[error(transparent)]
    Tiqf(#[from] TiqfError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A guarded move along `ray` until contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchAction {
    pub ray: Ray,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCriterion {
    /// Metres.
    pub trans_thresh: f64,
    /// Degrees.
    pub rot_thresh: f64,
}

impl Default for StopCriterion {
    fn default() -> Self {
        Self { trans_thresh: 0.005, rot_thresh: 2.0 }
    }
}

/// `per_face` inward rays on each of the six faces of the world-frame
/// bounding box of `model` at `estimate`, starting `standoff` outside it.
pub fn sample_touch_actions(
    estimate: &Pose,
    model: &TriangleMesh,
    per_face: usize,
    standoff: f64,
    seed: u64,
) -> Result<Vec<TouchAction>, NbtError> {
    if per_face == 0 {
        return Err(NbtError::InvalidArgument("per_face must be at least 1".into()));
    }
    if !(standoff > 0.0) {
        return Err(NbtError::InvalidArgument("standoff must be positive".into()));
    }
    let bb = model.bounds_at(estimate);
    if bb.extent().iter().any(|&e| !(e > 0.0)) {
        return Err(NbtError::DegenerateBox);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(6 * per_face);
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for _ in 0..per_face {
                let mut origin = Vector3::zeros();
                origin[axis] = if sign > 0.0 { bb.max[axis] + standoff } else { bb.min[axis] - standoff };
                origin[u] = rng.random_range(bb.min[u]..=bb.max[u]);
                origin[v] = rng.random_range(bb.min[v]..=bb.max[v]);
                let mut dir = Vector3::zeros();
                dir[axis] = -sign;
                out.push(TouchAction { ray: Ray::new(origin, dir)? });
            }
        }
    }
    Ok(out)
}

/// First contact of `action` with `model` placed at `estimate`.
pub fn predict_contact(action: &TouchAction, model: &TriangleMesh, estimate: &Pose) -> Option<Vector3<f64>> {
    ray_mesh_intersect(&action.ray, model, estimate).map(|(p, _)| p)
}

/// Pairs of `predicted` with each of the last two `contacts`; model-side
/// points are the closest surface points under `estimate`.
fn hypothetical_pairs(
    predicted: &Vector3<f64>,
    contacts: &PointCloud,
    model: &TriangleMesh,
    estimate: &Pose,
) -> Result<Vec<CorrespondencePair>, NbtError> {
    let n = contacts.len();
    if n < RECENT_CONTACTS {
        return Err(NbtError::InsufficientContacts { have: n, required: RECENT_CONTACTS });
    }
    let inv = estimate.inverse();
    let to_model = |p: &Vector3<f64>| model.closest_point(&inv.transform_point(p));
    let o_pred = to_model(predicted);
    Ok(contacts.points()[n - RECENT_CONTACTS..]
        .iter()
        .filter_map(|c| CorrespondencePair::new(*c, *predicted, to_model(c), o_pred).ok())
        .collect())
}

fn apply_pairs(state: &FilterState, pairs: &[CorrespondencePair], rho: f64) -> Result<FilterState, NbtError> {
    let mut s = state.clone();
    for pair in pairs {
        let h = build_pseudo_measurement(pair);
        match kalman_update(&s, &h, &measurement_noise(&s, rho)) {
            Ok(next) => s = next,
            Err(TiqfError::SingularInnovation) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(s)
}

/// Belief after hypothetically observing a contact at `predicted`. The input
/// state is not modified.
pub fn hypothetical_update(
    state: &FilterState,
    predicted: &Vector3<f64>,
    recent_contacts: &PointCloud,
    model: &TriangleMesh,
    estimate: &Pose,
    rho: f64,
) -> Result<FilterState, NbtError> {
    let pairs = hypothetical_pairs(predicted, recent_contacts, model, estimate)?;
    apply_pairs(state, &pairs, rho)
}

/// `KL(posterior ‖ prior)` between 4-d Gaussians.
pub fn kl_divergence(posterior: &FilterState, prior: &FilterState) -> Result<f64, NbtError> {
    let prior_chol = prior.covariance.cholesky().ok_or(NbtError::SingularPrior)?;
    let prior_inv: Matrix4<f64> = prior_chol.inverse();
    let det_prior = prior_chol.determinant();
    let det_post = posterior.covariance.determinant();
    if !(det_post > 0.0) {
        return Err(NbtError::InvalidArgument("posterior covariance is not positive definite".into()));
    }
    let dm = posterior.mean - prior.mean;
    let maha = (dm.transpose() * prior_inv * dm)[(0, 0)];
    let tr = (prior_inv * posterior.covariance).trace();
    Ok(0.5 * ((det_prior / det_post).ln() + tr - BELIEF_DIM + maha))
}

/// Action maximising the KL gain. Actions without a predicted contact are
/// excluded; ties go to the lowest index. Returns the index and its KL.
pub fn select_nbt(
    state: &FilterState,
    actions: &[TouchAction],
    model: &TriangleMesh,
    estimate: &Pose,
    recent_contacts: &PointCloud,
    rho: f64,
) -> Result<(usize, f64), NbtError> {
    if actions.is_empty() {
        return Err(NbtError::InvalidArgument("no candidate actions".into()));
    }
    if recent_contacts.len() < RECENT_CONTACTS {
        return Err(NbtError::InsufficientContacts { have: recent_contacts.len(), required: RECENT_CONTACTS });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in actions.iter().enumerate() {
        let Some(p) = predict_contact(a, model, estimate) else { continue };
        let post = hypothetical_update(state, &p, recent_contacts, model, estimate, rho)?;
        let kl = kl_divergence(&post, state)?;
        if best.is_none_or(|(_, b)| kl > b) {
            best = Some((i, kl));
        }
    }
    best.ok_or(NbtError::AllMiss)
}

/// True once the last change between consecutive estimates is below both
/// thresholds.
pub fn should_stop(history: &[Pose], crit: &StopCriterion) -> bool {
    match history {
        [.., prev, last] => {
            let (dt, dr) = last.delta(prev);
            dt < crit.trans_thresh && dr < crit.rot_thresh
        }
        _ => false,
    }
}

/// One step of the touch planner, for the JSON trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbtTraceStep {
    pub step: usize,
    pub candidate_count: usize,
    pub chosen_origin: [f64; 3],
    pub chosen_direction: [f64; 3],
    pub kl: f64,
    pub posterior_trace: f64,
}
