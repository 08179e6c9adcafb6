//! Command-line front end: `run`, `report`, `render-scene`, `validate-config`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vitac::experiment::{
    parse_seeds, write_report, write_scene_render, ExperimentConfig, ExperimentError, Pipeline, PipelineParams,
    SceneSource,
};

#[derive(Parser)]
#[command(name = "vitac", version, about = "Active visuo-tactile pose estimation in simulated clutter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scene TOML, `generated` or `generated-degraded`.
    #[arg(long, default_value = "generated")]
    scene: String,
    /// Parameter override, e.g. `tactile.touch_budget=6` (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run pipelines over seeds and write per-run outputs and metrics.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Pipeline name or `all`.
        #[arg(long, default_value = "all")]
        pipeline: String,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// `a..b`, `a..=b` or a comma-separated list.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summarise a run directory into summary.csv, series.csv and series.svg.
    Report {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a scene and write clouds, masks, meshes and the declutter graph.
    RenderScene {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "render")]
        out: PathBuf,
    },
    /// Check a scene and parameter overrides without running anything.
    ValidateConfig {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn params(common: &Common) -> Result<PipelineParams, ExperimentError> {
    let p = PipelineParams::default().with_overrides(&common.params)?;
    p.validate()?;
    Ok(p)
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run { common, pipeline, seed, seeds, out } => {
            let pipelines = if pipeline == "all" { Pipeline::ALL.to_vec() } else { vec![pipeline.parse()?] };
            let seeds = match (seed, seeds) {
                (Some(s), _) => vec![s],
                (None, Some(list)) => parse_seeds(&list)?,
                (None, None) => vec![0],
            };
            let cfg = ExperimentConfig { scene: SceneSource::parse(&common.scene), pipelines, seeds, params: params(&common)?, out };
            let outcome = cfg.execute()?;
            for r in &outcome.runs {
                let m = r.record.final_metrics().expect("completed runs have a stage");
                println!(
                    "{:<12} seed {:<4} {:<24} err_T {:7.2} mm  err_R {:7.2} deg  ADI {:7.2} mm",
                    r.record.scene,
                    r.record.seed,
                    r.record.pipeline.name(),
                    m.err_t * 1e3,
                    m.err_r,
                    m.err_adi * 1e3
                );
            }
            if let Some(f) = outcome.failures.first() {
                return Err(ExperimentError::Runtime(format!(
                    "{} of {} runs failed; first: {} {} seed {}: {}",
                    outcome.failures.len(),
                    outcome.failures.len() + outcome.runs.len(),
                    f.scene,
                    f.pipeline,
                    f.seed,
                    f.error
                )));
            }
            Ok(())
        }
        Command::Report { out } => {
            for s in write_report(&out)? {
                println!(
                    "{:<24} n={:<3} err_T {:6.2} / {:6.2} ± {:5.2} mm  ADI {:6.2} / {:6.2} ± {:5.2} mm (mean / median ± sd)",
                    s.pipeline, s.runs, s.err_t_mm_mean, s.err_t_mm_median, s.err_t_mm_std, s.adi_mm_mean, s.adi_mm_median, s.adi_mm_std
                );
            }
            Ok(())
        }
        Command::RenderScene { common, seed, out } => {
            let scene = SceneSource::parse(&common.scene).scene(seed)?;
            write_scene_render(&scene, &params(&common)?, seed, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::ValidateConfig { common, seed } => {
            params(&common)?;
            let scene = SceneSource::parse(&common.scene).scene(seed)?;
            println!("ok: scene `{}` with {} objects, target id {}", scene.name, scene.objects().len(), scene.target().id);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
