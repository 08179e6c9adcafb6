use nalgebra::Vector3;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PairingMode, TiqfError, SPARSE_LIMIT};
use crate::geometry::{KdTree, PointCloud, Pose};

const MIN_SEPARATION: f64 = 1e-9;

/// Two scene points and their model counterparts. Only the differences
/// `s_j − s_i` and `o_j − o_i` enter the filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencePair {
    pub scene_i: Vector3<f64>,
    pub scene_j: Vector3<f64>,
    pub model_i: Vector3<f64>,
    pub model_j: Vector3<f64>,
}

impl CorrespondencePair {
    pub fn new(
        scene_i: Vector3<f64>,
        scene_j: Vector3<f64>,
        model_i: Vector3<f64>,
        model_j: Vector3<f64>,
    ) -> Result<Self, TiqfError> {
        let pair = Self { scene_i, scene_j, model_i, model_j };
        if pair.scene_delta().norm() <= MIN_SEPARATION || pair.model_delta().norm() <= MIN_SEPARATION {
            return Err(TiqfError::DegeneratePair);
        }
        Ok(pair)
    }

    pub fn scene_delta(&self) -> Vector3<f64> {
        self.scene_j - self.scene_i
    }

    pub fn model_delta(&self) -> Vector3<f64> {
        self.model_j - self.model_i
    }
}

/// A scene point and its nearest model point (model frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub scene: Vector3<f64>,
    pub model: Vector3<f64>,
    /// Distance between the scene point and the model point under the pose
    /// used for matching.
    pub distance: f64,
}

/// Matches every scene point to its nearest model point with the model placed
/// at `current`.
pub fn match_to_model(scene: &[Vector3<f64>], model: &KdTree, current: &Pose) -> Vec<Match> {
    let inv = current.inverse();
    scene
        .iter()
        .map(|s| {
            let (i, d2) = model.nearest(&inv.transform_point(s));
            Match { scene: *s, model: *model.point(i), distance: d2.sqrt() }
        })
        .collect()
}

/// Groups matches into translation-invariant pairs, dropping degenerate ones.
///
/// `Permutation` subsamples to `max_pairs + 1` matches, shuffles them and
/// pairs consecutive elements (`N − 1` pairs). `AllPairs` pairs every match
/// with every earlier one.
pub fn form_pairs(
    matches: &[Match],
    mode: PairingMode,
    max_pairs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CorrespondencePair>, TiqfError> {
    if matches.len() < 2 {
        return Err(TiqfError::InsufficientData { usable: matches.len(), required: 2 });
    }
    let mode = match mode {
        PairingMode::Auto if matches.len() <= SPARSE_LIMIT => PairingMode::AllPairs,
        PairingMode::Auto => PairingMode::Permutation,
        m => m,
    };
    let mut pairs = Vec::new();
    let mut push = |a: &Match, b: &Match| {
        if let Ok(p) = CorrespondencePair::new(a.scene, b.scene, a.model, b.model) {
            pairs.push(p);
        }
    };
    match mode {
        PairingMode::AllPairs => {
            for k in 1..matches.len() {
                for j in 0..k {
                    push(&matches[j], &matches[k]);
                }
            }
        }
        _ => {
            let mut chosen: Vec<usize> = if matches.len() > max_pairs + 1 {
                let mut v = index::sample(rng, matches.len(), max_pairs + 1).into_vec();
                v.sort_unstable();
                v
            } else {
                (0..matches.len()).collect()
            };
            chosen.shuffle(rng);
            for w in chosen.windows(2) {
                push(&matches[w[0]], &matches[w[1]]);
            }
        }
    }
    if pairs.is_empty() {
        return Err(TiqfError::InsufficientData { usable: 0, required: 1 });
    }
    Ok(pairs)
}

/// Nearest-neighbour correspondences between `scene` and `model` (placed at
/// `current`), grouped into consecutive pairs of a seeded permutation.
pub fn find_correspondences(
    scene: &PointCloud,
    model: &PointCloud,
    current: &Pose,
    max_pairs: usize,
    seed: u64,
) -> Result<Vec<CorrespondencePair>, TiqfError> {
    if scene.len() < 2 {
        return Err(TiqfError::InsufficientData { usable: scene.len(), required: 2 });
    }
    let tree = KdTree::from_cloud(model)?;
    let matches = match_to_model(scene.points(), &tree, current);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    form_pairs(&matches, PairingMode::Permutation, max_pairs, &mut rng)
}
