//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vitac::geometry::{Pose, Quat};

/// Horn's closed-form absolute orientation (unit-quaternion method) for
/// index-matched point sets: returns the pose mapping `model` onto `scene`.
pub fn horn_alignment(scene: &[Vector3<f64>], model: &[Vector3<f64>]) -> Pose {
    let n = scene.len() as f64;
    let cs: Vector3<f64> = scene.iter().sum::<Vector3<f64>>() / n;
    let cm: Vector3<f64> = model.iter().sum::<Vector3<f64>>() / n;
    let mut m = Matrix3::zeros();
    for (s, o) in scene.iter().zip(model) {
        m += (o - cm) * (s - cs).transpose();
    }
    let (sxx, sxy, sxz) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (syx, syy, syz) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let (szx, szy, szz) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    let nmat = Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    );
    let eig = SymmetricEigen::new(nmat);
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    let q = Quat::new(v[0], v[1], v[2], v[3]).normalized().unwrap();
    let t = cs - q.rotate(&cm);
    Pose { rotation: q, translation: t }
}

/// Uniformly random rotation of exactly `angle_deg` about a random axis.
pub fn rotation_of_angle(rng: &mut ChaCha8Rng, angle_deg: f64) -> Quat {
    let axis = random_unit(rng);
    Quat::from_axis_angle(&axis, angle_deg.to_radians())
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

pub fn percentile(v: &mut [f64], p: f64) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let idx = ((p / 100.0) * (v.len() - 1) as f64).round() as usize;
    v[idx.min(v.len() - 1)]
}
