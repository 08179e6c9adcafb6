//! Next-best-view planning over a log-odds occupancy grid.
//!
//! Candidate views are sampled on a hemisphere above the target and scored
//! by the entropy reduction their predicted depth measurement would cause.

mod grid;
mod sensor;

pub use grid::{binary_entropy, log_odds, probability, GridDump, OccupancyGrid, LOG_ODDS_CLAMP, P_HIT, P_MISS};
pub use sensor::{view_axis_angle, view_orientation, SensorModel, Viewpoint};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Aabb;
use grid::{CellUpdate, UpdateBatch};

#[derive(Debug, thiserror::Error)]
pub enum NbvError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sensor: {0}")]
    InvalidSensor(String),
    #[error("sensor origin is not finite")]
    InvalidOrigin,
    #[error("view position coincides with the target centroid")]
    CoincidentPoints,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("workspace bounds exclude the viewing hemisphere")]
    WorkspaceExcludesHemisphere,
    #[error("no candidate viewpoints")]
    NoCandidates,
}

/// Shannon entropy of the grid in bits.
pub fn grid_entropy(grid: &OccupancyGrid) -> f64 {
    grid.entropy()
}

/// Folds a batch of returns from `origin` into `grid`.
pub fn integrate_measurement(
    grid: &mut OccupancyGrid,
    origin: &Vector3<f64>,
    hits: &[Vector3<f64>],
) -> Result<(), NbvError> {
    grid.integrate_measurement(origin, hits)
}

/// `n` look-at viewpoints uniform on the upper hemisphere of `radius` around
/// `centroid`, rejection-resampled into `workspace`.
pub fn sample_viewpoints(
    centroid: &Vector3<f64>,
    radius: f64,
    n: usize,
    seed: u64,
    workspace: &Aabb,
) -> Result<Vec<Viewpoint>, NbvError> {
    if n == 0 {
        return Err(NbvError::InvalidArgument("n must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(NbvError::InvalidArgument("radius must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 10_000 + 1_000 * n;
    let mut out = Vec::with_capacity(n);
    for _ in 0..max_attempts {
        // cos(polar) uniform on [0, 1] gives a uniform hemisphere
        let cos_t: f64 = rng.random();
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let p = centroid + radius * Vector3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t);
        if !workspace.contains(&p) {
            continue;
        }
        out.push(Viewpoint::look_at(p, centroid)?);
        if out.len() == n {
            return Ok(out);
        }
    }
    Err(NbvError::WorkspaceExcludesHemisphere)
}

/// Entropy reduction (bits) from integrating the measurement predicted for
/// `view`. Each ray stops at the first cell with `p > 0.5` (a hit) or after
/// `d_ray`; every other cell it crosses is a predicted miss. The grid is not
/// modified.
pub fn expected_info_gain(grid: &OccupancyGrid, view: &Viewpoint, sensor: &SensorModel) -> f64 {
    let mut batch = UpdateBatch::new(grid.len());
    for ray in view.rays(sensor) {
        let end = ray.at(sensor.d_ray);
        let (cells, _) = grid.traverse(&ray.origin, &end);
        for c in cells {
            if grid.log_odds_at(c) > 0.0 {
                batch.record(c, CellUpdate::Hit);
                break;
            }
            batch.record(c, CellUpdate::Miss);
        }
    }
    batch
        .iter()
        .map(|(c, u)| {
            let l = grid.log_odds_at(c);
            let post = (l + u.delta()).clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP);
            binary_entropy(probability(l)) - binary_entropy(probability(post))
        })
        .sum()
}

/// Index and gain of the candidate with the largest expected gain; ties go
/// to the lowest index.
pub fn select_nbv(grid: &OccupancyGrid, candidates: &[Viewpoint], sensor: &SensorModel) -> Result<(usize, f64), NbvError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in candidates.iter().enumerate() {
        let g = expected_info_gain(grid, v, sensor);
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((i, g));
        }
    }
    best.ok_or(NbvError::NoCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_ray_sensor() -> SensorModel {
        SensorModel { hfov_deg: 1.0, vfov_deg: 1.0, ray_cols: 1, ray_rows: 1, d_ray: 10.0 }
    }

    #[test]
    fn single_unknown_cell_predicted_miss() {
        let g = OccupancyGrid::new(Vector3::zeros(), 1.0, [1, 1, 1]).unwrap();
        let v = Viewpoint::look_at(Vector3::new(0.5, 0.5, 5.0), &Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let gain = expected_info_gain(&g, &v, &single_ray_sensor());
        assert_relative_eq!(gain, 1.0 - binary_entropy(0.4), epsilon = 1e-12);
        assert_relative_eq!(gain, 0.029_049_405_545_331_5, epsilon = 1e-12);
    }

    #[test]
    fn saturated_grid_has_negligible_gain() {
        let mut g = OccupancyGrid::new(Vector3::zeros(), 0.1, [5, 5, 5]).unwrap();
        for i in 0..g.len() {
            g.set_log_odds(i, if i % 3 == 0 { 100.0 } else { -100.0 });
        }
        let v = Viewpoint::look_at(Vector3::new(0.25, 0.25, 1.0), &Vector3::new(0.25, 0.25, 0.25)).unwrap();
        let s = SensorModel { ray_cols: 8, ray_rows: 6, ..SensorModel::default() };
        let gain = expected_info_gain(&g, &v, &s);
        assert!(gain >= 0.0 && gain <= 0.02 * g.len() as f64);
    }

    #[test]
    fn gain_is_pure() {
        let mut g = OccupancyGrid::new(Vector3::zeros(), 0.05, [8, 8, 8]).unwrap();
        g.set_log_odds(100, 1.0);
        let before = g.clone();
        let v = Viewpoint::look_at(Vector3::new(0.2, 0.2, 0.8), &Vector3::new(0.2, 0.2, 0.2)).unwrap();
        let s = SensorModel { ray_cols: 16, ray_rows: 12, ..SensorModel::default() };
        let a = expected_info_gain(&g, &v, &s);
        let b = expected_info_gain(&g, &v, &s);
        assert_eq!(a, b);
        assert_eq!(g, before);
    }

    #[test]
    fn select_nbv_contract() {
        let g = OccupancyGrid::new(Vector3::zeros(), 0.05, [8, 8, 8]).unwrap();
        let s = SensorModel { ray_cols: 8, ray_rows: 6, ..SensorModel::default() };
        let c = Vector3::new(0.2, 0.2, 0.2);
        let one = vec![Viewpoint::look_at(Vector3::new(0.2, 0.2, 0.9), &c).unwrap()];
        assert_eq!(select_nbv(&g, &one, &s).unwrap().0, 0);
        assert!(matches!(select_nbv(&g, &[], &s), Err(NbvError::NoCandidates)));
        // identical candidates tie: lowest index wins
        let two = vec![one[0].clone(), one[0].clone()];
        assert_eq!(select_nbv(&g, &two, &s).unwrap().0, 0);
    }

    #[test]
    fn sampling_contract() {
        let c = Vector3::new(0.5, 0.0, 0.1);
        let ws = Aabb::new(Vector3::new(-2.0, -2.0, -2.0), Vector3::new(2.0, 2.0, 2.0));
        let a = sample_viewpoints(&c, 0.5, 32, 7, &ws).unwrap();
        assert_eq!(a, sample_viewpoints(&c, 0.5, 32, 7, &ws).unwrap());
        for v in &a {
            assert!(((v.position - c).norm() - 0.5).abs() < 1e-9);
            assert!(v.position.z >= c.z);
        }
        let below = Aabb::new(Vector3::new(-2.0, -2.0, -2.0), Vector3::new(2.0, 2.0, 0.0));
        assert!(matches!(sample_viewpoints(&c, 0.5, 4, 0, &below), Err(NbvError::WorkspaceExcludesHemisphere)));
        assert!(sample_viewpoints(&c, 0.5, 0, 0, &ws).is_err());
    }
}
