//! Segments a top-down render of the bundled scene, builds the declutter
//! graph rooted at the target and prints the removal order it implies.
//!
//! ```text
//! cargo run --release --example declutter_graph
//! ```

use nalgebra::Vector3;
use vitac::declutter::{attribute_actions, build_graph, extract_detections, next_object, remove_and_update, NextObject};
use vitac::experiment::PipelineParams;
use vitac::nbv::Viewpoint;
use vitac::sim::{grasp_quality_stub, render_depth, Scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = Scene::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/scenes/bundled.toml"))?;
    let p = PipelineParams::default().declutter;

    let c = scene.workspace.center();
    let look = Vector3::new(c.x, c.y, scene.table_height);
    let view = Viewpoint::look_at(look + Vector3::z() * p.camera_height, &look)?;
    let img = render_depth(&scene, &view, &p.camera, 0);
    let mask = img.mask();

    let mut dets = extract_detections(&mask)?;
    for d in dets.iter_mut() {
        let (q, pose) = grasp_quality_stub(&scene, d.id, &img)?;
        d.grasp_quality = q;
        d.grasp_pose = pose;
        println!("object {:2}: {:5} px, grasp quality {:.3}", d.id, d.area_px, q);
    }
    let mut graph = build_graph(&dets, scene.target().id, &p.rules, mask.diagonal())?;
    attribute_actions(&mut graph, p.rules.mu_q);
    println!("\n{}", graph.to_dot());

    while let NextObject::Remove { id, action, weight } = next_object(&graph) {
        println!("remove {id:2} by {action:?} (edge weight {weight:.3})");
        remove_and_update(&mut graph, id)?;
    }
    println!("target {} is exposed", graph.root());
    Ok(())
}
