//! Occupancy-grid traversal, entropy and information gain against
//! independent oracles.

mod common;

use common::*;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::Rng;
use vitac::geometry::Aabb;
use vitac::nbv::*;

/// Length of the segment `a → b` inside the box `[lo, hi]` (slab method).
fn overlap_length(a: &Vector3<f64>, b: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> f64 {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return 0.0;
            }
        } else {
            let (u, v) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
    }
    (t1 - t0).max(0.0) * d.norm()
}

fn random_point(r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> Vector3<f64> {
    Vector3::new(r.random_range(lo..hi), r.random_range(lo..hi), r.random_range(lo..hi))
}

#[test]
fn traversal_matches_slab_oracle() {
    let grid = OccupancyGrid::new(Vector3::new(-0.2, -0.1, 0.0), 0.05, [8, 6, 5]).unwrap();
    let mut r = rng(21);
    for _ in 0..300 {
        let a = random_point(&mut r, -0.5, 0.5);
        let b = random_point(&mut r, -0.5, 0.5);
        let (cells, _) = grid.traverse(&a, &b);
        let unique: std::collections::BTreeSet<usize> = cells.iter().copied().collect();
        assert_eq!(unique.len(), cells.len(), "a cell was visited twice");
        for i in 0..grid.len() {
            let bb = grid.cell_bounds(grid.coords(i));
            let len = overlap_length(&a, &b, &bb.min, &bb.max);
            if len > 1e-9 {
                assert!(unique.contains(&i), "cell {i} crossed for {len} m but not visited");
            }
            if unique.contains(&i) {
                let grown = overlap_length(&a, &b, &bb.min.add_scalar(-1e-9), &bb.max.add_scalar(1e-9));
                assert!(grown > 0.0, "cell {i} visited but not crossed");
            }
        }
        // consecutive cells are face neighbours
        for w in cells.windows(2) {
            let (p, q) = (grid.coords(w[0]), grid.coords(w[1]));
            let dist: usize = (0..3).map(|k| p[k].abs_diff(q[k])).sum();
            assert_eq!(dist, 1);
        }
    }
}

#[test]
fn hemisphere_samples_are_uniform() {
    let c = Vector3::new(0.0, 0.0, 0.1);
    let ws = Aabb::new(Vector3::new(-5.0, -5.0, -5.0), Vector3::new(5.0, 5.0, 5.0));
    let n = 4000;
    let views = sample_viewpoints(&c, 0.5, n, 3, &ws).unwrap();
    let mut cos_polar: Vec<f64> = views.iter().map(|v| (v.position.z - c.z) / 0.5).collect();
    let mut azimuth: Vec<f64> = views
        .iter()
        .map(|v| ((v.position.y - c.y).atan2(v.position.x - c.x) + std::f64::consts::TAU) % std::f64::consts::TAU / std::f64::consts::TAU)
        .collect();
    // Kolmogorov–Smirnov against U(0, 1), critical value at alpha = 0.001
    let critical = 1.95 / (n as f64).sqrt();
    for sample in [&mut cos_polar, &mut azimuth] {
        sample.sort_by(|a, b| a.total_cmp(b));
        let d = sample
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).abs().max((x - i as f64 / n as f64).abs()))
            .fold(0.0, f64::max);
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }
}

#[test]
fn expected_gain_matches_integrated_prediction() {
    let sensor = SensorModel { ray_cols: 12, ray_rows: 9, d_ray: 3.0, ..SensorModel::default() };
    let mut r = rng(22);
    for _ in 0..10 {
        let mut grid = OccupancyGrid::new(Vector3::new(-0.15, -0.15, 0.0), 0.03, [10, 10, 10]).unwrap();
        for i in 0..grid.len() {
            if r.random_bool(0.05) {
                grid.set_log_odds(i, r.random_range(0.1..3.0));
            } else if r.random_bool(0.3) {
                grid.set_log_odds(i, -r.random_range(0.1..3.0));
            }
        }
        let centroid = grid.bounds().center();
        let ws = Aabb::new(Vector3::new(-2.0, -2.0, -2.0), Vector3::new(2.0, 2.0, 2.0));
        for view in sample_viewpoints(&centroid, 0.6, 4, r.random(), &ws).unwrap() {
            // predicted returns: the first occupied cell along each ray, or the
            // far end of the ray when it sees nothing
            let hits: Vec<Vector3<f64>> = view
                .rays(&sensor)
                .iter()
                .map(|ray| {
                    let far = ray.at(sensor.d_ray);
                    let (cells, _) = grid.traverse(&ray.origin, &far);
                    match cells.iter().find(|&&c| grid.log_odds_at(c) > 0.0) {
                        Some(&c) => {
                            let bb = grid.cell_bounds(grid.coords(c));
                            let (t0, t1) = bb.ray_interval(ray).unwrap();
                            ray.at(0.5 * (t0 + t1))
                        }
                        None => far,
                    }
                })
                .collect();
            let mut after = grid.clone();
            after.integrate_measurement(&view.position, &hits).unwrap();
            let oracle = grid_entropy(&grid) - grid_entropy(&after);
            let gain = expected_info_gain(&grid, &view, &sensor);
            assert!((gain - oracle).abs() < 1e-8, "gain {gain} vs oracle {oracle}");
        }
    }
}

fn log_odds_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-LOG_ODDS_CLAMP..LOG_ODDS_CLAMP, 125)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_bounded(field in log_odds_field()) {
        let mut grid = OccupancyGrid::new(Vector3::zeros(), 0.1, [5, 5, 5]).unwrap();
        for (i, l) in field.iter().enumerate() {
            grid.set_log_odds(i, *l);
        }
        let h = grid_entropy(&grid);
        prop_assert!(h >= 0.0 && h <= grid.len() as f64 + 1e-12);
    }

    #[test]
    fn gain_is_non_negative(field in log_odds_field(), az in 0.0..std::f64::consts::TAU, el in 0.1..1.5f64) {
        let mut grid = OccupancyGrid::new(Vector3::zeros(), 0.1, [5, 5, 5]).unwrap();
        for (i, l) in field.iter().enumerate() {
            grid.set_log_odds(i, *l);
        }
        let c = grid.bounds().center();
        let p = c + 0.8 * Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
        let view = Viewpoint::look_at(p, &c).unwrap();
        let sensor = SensorModel { ray_cols: 8, ray_rows: 6, ..SensorModel::default() };
        prop_assert!(expected_info_gain(&grid, &view, &sensor) >= -1e-12);
    }

    #[test]
    fn single_return_updates_its_path(x in 0.01..0.49f64, y in 0.01..0.49f64, z in 0.01..0.49f64) {
        let mut grid = OccupancyGrid::new(Vector3::zeros(), 0.1, [5, 5, 5]).unwrap();
        let origin = Vector3::new(0.25, 0.25, 2.0);
        let hit = Vector3::new(x, y, z);
        let (cells, inside) = grid.traverse(&origin, &hit);
        prop_assert!(inside);
        grid.integrate_measurement(&origin, &[hit]).unwrap();
        let hit_cell = grid.index(grid.cell_of(&hit).unwrap());
        prop_assert!((grid.log_odds_at(hit_cell) - log_odds(P_HIT)).abs() < 1e-12);
        for &c in &cells[..cells.len() - 1] {
            prop_assert!((grid.log_odds_at(c) - log_odds(P_MISS)).abs() < 1e-12);
        }
        let touched = cells.len();
        prop_assert_eq!(grid.log_odds_cells().iter().filter(|l| **l != 0.0).count(), touched);
    }
}
