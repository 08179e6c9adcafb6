//! Runs the full declutter, active-vision and tactile pipeline on the
//! bundled scene and prints the error after every stage.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [seed]
//! ```

use vitac::experiment::{run_pipeline, ActionRecord, Pipeline, PipelineParams};
use vitac::sim::Scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let scene = Scene::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/scenes/bundled.toml"))?;
    let out = run_pipeline(&scene, Pipeline::Full, &PipelineParams::default(), seed)?;
    let r = &out.record;
    for a in &r.actions {
        let kind = match a {
            ActionRecord::View { .. } => "view",
            ActionRecord::Touch { .. } => "touch",
            ActionRecord::Grasp { .. } => "grasp",
            ActionRecord::Push { .. } => "push",
        };
        print!("{kind} ");
    }
    println!();
    for s in &r.stages {
        let m = &s.metrics;
        println!("{:<14} err_T {:6.2} mm  err_R {:5.2} deg  ADI {:6.2} mm", s.stage, m.err_t * 1e3, m.err_r, m.err_adi * 1e3);
    }
    println!("removed {} objects, {} views, {} touches, {:.1} s", r.declutter_count, r.views, r.touches, r.wall_time_s);
    Ok(())
}
