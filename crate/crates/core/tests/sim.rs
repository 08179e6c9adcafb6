//! Simulator consistency and metric properties on generated scenes.

mod common;

use common::*;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::Rng;
use vitac::geometry::*;
use vitac::nbt::{sample_touch_actions, TouchAction};
use vitac::nbv::{SensorModel, Viewpoint};
use vitac::sim::*;

fn noiseless(mut scene: Scene) -> Scene {
    scene.noise = NoiseModel::noiseless();
    scene
}

fn distance_to_object(scene: &Scene, id: u32, p: &Vector3<f64>) -> f64 {
    let obj = scene.object(id).unwrap();
    let local = obj.pose.inverse().transform_point(p);
    (obj.mesh.closest_point(&local) - local).norm()
}

#[test]
fn noiseless_renders_agree_with_their_label_images() {
    let sensor = SensorModel { ray_cols: 48, ray_rows: 36, ..SensorModel::default() };
    for seed in 0..5 {
        let scene = noiseless(generate_scene(seed, &GeneratorParams::default()).unwrap());
        let c = scene.target().pose.translation;
        let view = Viewpoint::look_at(c + Vector3::new(-0.3, 0.1, 0.4), &c).unwrap();
        let img = render_depth(&scene, &view, &sensor, seed);
        assert_eq!(img.points.len(), sensor.ray_count());
        for (p, &id) in img.points.iter().zip(&img.ids) {
            match (p, id) {
                (Some(p), TABLE_ID) => assert!((p.z - scene.table_height).abs() < 1e-7),
                (Some(p), id) => assert!(distance_to_object(&scene, id, p) < 1e-7),
                (None, id) => assert_eq!(id, TABLE_ID),
            }
        }
    }
}

#[test]
fn renders_and_touches_are_deterministic() {
    let scene = generate_scene(4, &GeneratorParams::default()).unwrap();
    let c = scene.target().pose.translation;
    let view = Viewpoint::look_at(c + Vector3::new(0.2, 0.2, 0.4), &c).unwrap();
    let sensor = SensorModel { ray_cols: 32, ray_rows: 24, ..SensorModel::default() };
    let a = render_depth(&scene, &view, &sensor, 9);
    let b = render_depth(&scene, &view, &sensor, 9);
    assert_eq!(a.points, b.points);
    assert_eq!(a.ids, b.ids);
    let c2 = render_depth(&scene, &view, &sensor, 10);
    assert_ne!(a.points, c2.points);
    let t = scene.target();
    for action in sample_touch_actions(&t.pose, &t.mesh, 4, 0.05, 1).unwrap() {
        assert_eq!(simulate_touch(&scene, &action, 3), simulate_touch(&scene, &action, 3));
    }
}

#[test]
fn noiseless_touches_land_on_the_first_surface() {
    let mut r = rng(51);
    for seed in 0..5 {
        let scene = noiseless(generate_scene(seed, &GeneratorParams::default()).unwrap());
        let t = scene.target();
        for action in sample_touch_actions(&t.pose, &t.mesh, 6, 0.05, r.random()).unwrap() {
            let Some(contact) = simulate_touch(&scene, &action, 0) else { continue };
            if contact.id != TABLE_ID {
                assert!(distance_to_object(&scene, contact.id, &contact.point) < 1e-7);
            }
            // nothing lies on the ray before the contact
            let depth = (contact.point - action.ray.origin).norm();
            for o in scene.objects() {
                if let Some((_, d)) = ray_mesh_intersect(&action.ray, &o.mesh, &o.pose) {
                    assert!(d >= depth - 1e-9);
                }
            }
        }
    }
}

#[test]
fn touches_past_everything_miss() {
    let scene = generate_scene(2, &GeneratorParams::default()).unwrap();
    let up = TouchAction { ray: Ray::new(Vector3::new(0.0, 0.0, 1.0), Vector3::z()).unwrap() };
    assert!(simulate_touch(&scene, &up, 0).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adi_equals_translation_error_for_equal_rotations(
        angle in 0.0..3.1f64,
        t in prop::array::uniform3(-0.05..0.05f64),
        seed in 0u64..100,
    ) {
        let model = sample_mesh_surface(&TriangleMesh::cuboid(Vector3::new(0.05, 0.08, 0.12)).unwrap(), 200, seed).unwrap();
        let q = Quat::from_axis_angle(&Vector3::new(0.3, -0.2, 1.0).normalize(), angle);
        let gt = Pose::new(q, Vector3::new(0.1, 0.2, 0.0)).unwrap();
        let est = Pose::new(q, gt.translation + Vector3::from(t)).unwrap();
        let m = compute_metrics(&est, &gt, &model);
        prop_assert!(m.err_adi <= m.err_t + 1e-12);
        prop_assert!(m.err_r < 1e-5);
    }

    #[test]
    fn adi_is_bounded_by_translation_and_rotation(
        angle in 0.0..3.1f64,
        t in prop::array::uniform3(-0.05..0.05f64),
        seed in 0u64..100,
    ) {
        let mesh = TriangleMesh::cuboid(Vector3::new(0.05, 0.08, 0.12)).unwrap();
        let model = sample_mesh_surface(&mesh, 200, seed).unwrap();
        let radius = model.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
        let gt = Pose::identity();
        let est = Pose::new(Quat::from_axis_angle(&Vector3::x(), angle), Vector3::from(t)).unwrap();
        let m = compute_metrics(&est, &gt, &model);
        prop_assert!(m.err_adi >= 0.0 && m.err_t >= 0.0 && m.err_r >= 0.0);
        prop_assert!((m.err_r - angle.to_degrees()).abs() < 1e-6);
        prop_assert!(m.err_adi <= m.err_t + 2.0 * radius * (angle / 2.0).sin() + 1e-12);
    }
}
