//! Runs the four pipelines over generated scenes and prints per-pipeline
//! error statistics.
//!
//! ```text
//! cargo run --release --example ablation -- [scenes] [first-seed]
//! ```

use vitac::experiment::{metrics_rows, run_pipeline, summarize, Pipeline, PipelineParams};
use vitac::sim::{generate_scene, GeneratorParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let scenes: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let first: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let params = PipelineParams::default();
    let mut runs = Vec::new();
    for seed in first..first + scenes {
        let scene = generate_scene(seed, &GeneratorParams::default())?;
        for p in Pipeline::ALL {
            match run_pipeline(&scene, p, &params, seed) {
                Ok(out) => {
                    let m = out.record.final_metrics().expect("at least one stage");
                    println!(
                        "seed {seed:3} {:<24} adi {:7.2} mm  t {:7.2} mm  r {:6.2} deg  views {} touches {} removed {}",
                        p.name(),
                        m.err_adi * 1e3,
                        m.err_t * 1e3,
                        m.err_r,
                        out.record.views,
                        out.record.touches,
                        out.record.declutter_count
                    );
                    runs.push(out);
                }
                Err(e) => println!("seed {seed:3} {:<24} failed: {e}", p.name()),
            }
        }
    }
    println!();
    for s in summarize(&metrics_rows(&runs)) {
        println!(
            "{:<24} n={:2}  adi median {:7.2} mean {:7.2}  t median {:7.2}",
            s.pipeline, s.runs, s.adi_mm_median, s.adi_mm_mean, s.err_t_mm_median
        );
    }
    Ok(())
}
