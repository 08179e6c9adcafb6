//! Linear Kalman machinery on the rotation quaternion.
//!
//! A corresponding pair of relative vectors `s_ji = R o_ji` is rewritten as
//! `s̃_ji ⊙ x − x ⊙ õ_ji = 0`, i.e. `H x = 0` with `H = L(s̃_ji) − R(õ_ji)`.
//! Enforcing the zero pseudo-measurement through a Kalman update pulls the
//! quaternion belief towards the null space of every `H` seen so far.

use nalgebra::{Matrix4, Vector4};

use super::{CorrespondencePair, FilterState, TiqfError};
use crate::geometry::skew;

/// Pseudo-measurement matrix of one translation-invariant pair:
///
/// ```text
/// H = | 0            −(s_ji − o_ji)ᵀ |
///     | s_ji − o_ji   [s_ji + o_ji]×  |
/// ```
pub fn build_pseudo_measurement(pair: &CorrespondencePair) -> Matrix4<f64> {
    let s = pair.scene_delta();
    let o = pair.model_delta();
    let d = s - o;
    let sum = s + o;
    let mut h = Matrix4::zeros();
    h.fixed_view_mut::<1, 3>(0, 1).copy_from(&(-d.transpose()));
    h.fixed_view_mut::<3, 1>(1, 0).copy_from(&d);
    h.fixed_view_mut::<3, 3>(1, 1).copy_from(&skew(&sum));
    h
}

/// State-dependent measurement covariance
/// `Σʰ = ρ/4 · [tr(x̄x̄ᵀ + Σ̄) I₄ − (x̄x̄ᵀ + Σ̄)]`.
pub fn measurement_noise(state: &FilterState, rho: f64) -> Matrix4<f64> {
    let a = state.mean * state.mean.transpose() + state.covariance;
    (Matrix4::identity() * a.trace() - a) * (rho / 4.0)
}

/// One Kalman step with the zero pseudo-measurement, followed by the
/// unit-norm projection of the mean (covariance scaled by `1/‖x‖²`) and
/// symmetrization of the covariance.
pub fn kalman_update(state: &FilterState, h: &Matrix4<f64>, noise: &Matrix4<f64>) -> Result<FilterState, TiqfError> {
    if h.iter().all(|&v| v == 0.0) {
        return Ok(state.clone());
    }
    let p = &state.covariance;
    let innovation_cov = h * p * h.transpose() + noise;
    let inv = innovation_cov
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(TiqfError::SingularInnovation)?;
    let gain = p * h.transpose() * inv;
    let x: Vector4<f64> = state.mean - gain * (h * state.mean);
    let cov = (Matrix4::identity() - gain * h) * p;
    let n2 = x.norm_squared();
    if !(n2.is_finite() && n2 > 0.0) {
        return Err(TiqfError::SingularInnovation);
    }
    let cov = cov / n2;
    Ok(FilterState { mean: x / n2.sqrt(), covariance: (cov + cov.transpose()) * 0.5 })
}
