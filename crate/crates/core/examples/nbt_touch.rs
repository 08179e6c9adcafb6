//! Refines a perturbed pose of an isolated object with simulated touches
//! chosen by next-best-touch planning, printing the error after each touch.
//!
//! ```text
//! cargo run --release --example nbt_touch -- [seed]
//! ```

use nalgebra::Vector3;
use vitac::experiment::{run_tactile, PipelineParams};
use vitac::geometry::{sample_mesh_surface, Pose, Quat};
use vitac::sim::{compute_metrics, generate_scene, GeneratorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let scene = generate_scene(seed, &GeneratorParams { clutter: 0, ..GeneratorParams::default() })?;
    let target = scene.target();
    let truth = target.pose;

    let offset = Pose::new(Quat::from_axis_angle(&Vector3::z(), 6f64.to_radians()), Vector3::new(0.012, -0.008, 0.0))?;
    let init = Pose::new(offset.rotation * truth.rotation, truth.translation + offset.translation)?;

    let params = PipelineParams::default();
    let out = run_tactile(&scene, &target.mesh, init, &params, seed)?;
    let model = sample_mesh_surface(&target.mesh, 5000, 0)?;

    let m = compute_metrics(&init, &truth, &model);
    println!("initial       err_T {:6.2} mm  err_R {:5.2} deg  ADI {:6.2} mm", m.err_t * 1e3, m.err_r, m.err_adi * 1e3);
    for k in 1..=out.touches {
        if let Some(p) = out.estimate_after(k) {
            let m = compute_metrics(&p, &truth, &model);
            println!("touch {k:2}      err_T {:6.2} mm  err_R {:5.2} deg  ADI {:6.2} mm", m.err_t * 1e3, m.err_r, m.err_adi * 1e3);
        }
    }
    println!("contacts on target: {}, free-space rays: {}", out.contacts.len(), out.free_rays.len());
    for step in &out.trace {
        println!("{}", serde_json::to_string(step)?);
    }
    Ok(())
}
