//! Writes the bundled scene, its home-view point cloud, top-down mask and
//! declutter graph to a directory.
//!
//! ```text
//! cargo run --release --example scene_render -- [out-dir]
//! ```

use std::path::PathBuf;

use vitac::experiment::{write_scene_render, PipelineParams};
use vitac::sim::Scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("vitac_scene_render"));
    let scene = Scene::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/scenes/bundled.toml"))?;
    write_scene_render(&scene, &PipelineParams::default(), 0, &out)?;
    for entry in std::fs::read_dir(&out)? {
        let entry = entry?;
        println!("{:>9} bytes  {}", entry.metadata()?.len(), entry.path().display());
    }
    Ok(())
}
