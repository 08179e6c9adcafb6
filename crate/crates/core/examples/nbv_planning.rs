//! Builds an occupancy grid from one depth render of the bundled scene and
//! ranks candidate viewpoints by expected information gain.
//!
//! ```text
//! cargo run --release --example nbv_planning -- [candidates]
//! ```

use nalgebra::Vector3;
use vitac::experiment::PipelineParams;
use vitac::nbv::{expected_info_gain, grid_entropy, sample_viewpoints, select_nbv, OccupancyGrid, Viewpoint};
use vitac::sim::{render_depth, Scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let scene = Scene::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/scenes/bundled.toml"))?;
    let vp = PipelineParams::default().vision;

    let centroid = scene.target().pose.translation;
    let mut grid = OccupancyGrid::around(centroid, vp.grid_margin, vp.grid_resolution)?;
    println!("grid {:?} cells, entropy {:.1} bits", grid.dims(), grid_entropy(&grid));

    let home = Viewpoint::look_at(Vector3::from(vp.home_view), &centroid)?;
    let img = render_depth(&scene, &home, &vp.camera, 1);
    let hits: Vec<Vector3<f64>> = img.points.iter().flatten().copied().collect();
    grid.integrate_measurement(&home.position, &hits)?;
    println!("after home view: entropy {:.1} bits", grid_entropy(&grid));

    let candidates = sample_viewpoints(&centroid, vp.radius, n, 7, &scene.workspace)?;
    for (i, v) in candidates.iter().enumerate() {
        let gain = expected_info_gain(&grid, v, &vp.planning_sensor);
        let p = v.position;
        println!("candidate {i:2} at ({:+.3}, {:+.3}, {:+.3})  gain {gain:8.2}", p.x, p.y, p.z);
    }
    let (best, gain) = select_nbv(&grid, &candidates, &vp.planning_sensor)?;
    println!("next best view: candidate {best} (gain {gain:.2} bits)");
    Ok(())
}
