//! Experiment orchestration: the four ablation pipelines, run records and
//! the report writers used by the command-line tool.
//!
//! | pipeline | declutter | active vision | touch |
//! |---|---|---|---|
//! | `static` | no | no | no |
//! | `active-vision` | no | yes | no |
//! | `declutter+active-vision` | yes | yes | no |
//! | `full` | yes | yes | yes |

mod params;
mod pipeline;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{generate_scene, GeneratorParams, Scene};

pub use params::{DeclutterRunParams, PipelineParams, TactileParams, VisionParams};
pub use pipeline::{
    run_pipeline, run_tactile, ActionRecord, NbvTraceStep, RunArtifacts, RunOutput, RunRecord, StageRecord,
    TactileOutcome, TracePoint,
};
pub use report::{
    final_rows, metrics_rows, read_metrics_csv, read_records, run_dir, series, summarize, write_failure,
    write_metrics_csv, write_run_dir, write_scene_render, write_series_csv, write_series_svg, write_summary_csv, MetricsRow, RunFailure,
    SeriesRow, SummaryRow,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Invalid configuration; exit code 2 in the CLI.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running; exit code 3 in the CLI.
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                ExperimentError::Runtime(e.to_string())
            }
        }
    )*};
}

runtime_from!(
    crate::geometry::GeometryError,
    crate::tiqf::TiqfError,
    crate::nbv::NbvError,
    crate::nbt::NbtError,
    crate::declutter::DeclutterError,
    std::io::Error,
    serde_json::Error
);

impl From<crate::sim::SimError> for ExperimentError {
    fn from(e: crate::sim::SimError) -> Self {
        match e {
            crate::sim::SimError::Config(_) | crate::sim::SimError::InvalidScene(_) | crate::sim::SimError::Io(_) => {
                ExperimentError::Config(e.to_string())
            }
            other => ExperimentError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pipeline {
    #[serde(rename = "static")]
    Static,
    #[serde(rename = "active-vision")]
    ActiveVision,
    #[serde(rename = "declutter+active-vision")]
    DeclutterActiveVision,
    #[serde(rename = "full")]
    Full,
}

impl Pipeline {
    pub const ALL: [Pipeline; 4] =
        [Pipeline::Static, Pipeline::ActiveVision, Pipeline::DeclutterActiveVision, Pipeline::Full];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Static => "static",
            Pipeline::ActiveVision => "active-vision",
            Pipeline::DeclutterActiveVision => "declutter+active-vision",
            Pipeline::Full => "full",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown pipeline `{s}`")))
    }
}

/// Where scenes come from: a TOML file, or the seeded generator (`generated`,
/// or `generated-degraded` for a target with degraded depth).
#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    File(PathBuf),
    Generated { degraded_depth: bool },
}

impl SceneSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "generated" => SceneSource::Generated { degraded_depth: false },
            "generated-degraded" => SceneSource::Generated { degraded_depth: true },
            path => SceneSource::File(PathBuf::from(path)),
        }
    }

    /// The scene for `seed`; file scenes ignore the seed.
    pub fn scene(&self, seed: u64) -> Result<Scene, ExperimentError> {
        match self {
            SceneSource::File(path) => Ok(Scene::load(path)?),
            SceneSource::Generated { degraded_depth } => {
                let params = GeneratorParams { degraded_depth: *degraded_depth, ..GeneratorParams::default() };
                Ok(generate_scene(seed, &params)?)
            }
        }
    }
}

/// Parses `a..b`, `a..=b`, or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, ExperimentError> {
    let bad = || ExperimentError::Config(format!("invalid seed list `{s}`"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// A batch of runs: every pipeline on every seed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scene: SceneSource,
    pub pipelines: Vec<Pipeline>,
    pub seeds: Vec<u64>,
    pub params: PipelineParams,
    pub out: PathBuf,
}

/// Outcome of [`ExperimentConfig::execute`].
#[derive(Debug, Clone, Default)]
pub struct BatchOutcome {
    pub runs: Vec<RunOutput>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("no seeds given".into()));
        }
        if self.pipelines.is_empty() {
            return Err(ExperimentError::Config("no pipelines given".into()));
        }
        self.params.validate()
    }

    /// Runs the batch, writing one directory per run and `metrics.csv` into
    /// `out`. Scene loading problems abort; failed runs are recorded and the
    /// batch continues.
    pub fn execute(&self) -> Result<BatchOutcome, ExperimentError> {
        self.validate()?;
        std::fs::create_dir_all(&self.out)?;
        let mut outcome = BatchOutcome::default();
        for &seed in &self.seeds {
            let scene = self.scene.scene(seed)?;
            for &pipeline in &self.pipelines {
                log::info!("{} {} seed {}", scene.name, pipeline, seed);
                match run_pipeline(&scene, pipeline, &self.params, seed) {
                    Ok(run) => {
                        write_run_dir(&self.out, &run, &self.params)?;
                        outcome.runs.push(run);
                    }
                    Err(e) => {
                        log::error!("{} {} seed {}: {e}", scene.name, pipeline, seed);
                        let failure = RunFailure {
                            scene: scene.name.clone(),
                            pipeline,
                            seed,
                            error: e.to_string(),
                            exit_code: e.exit_code(),
                        };
                        write_failure(&self.out, &failure)?;
                        outcome.failures.push(failure);
                    }
                }
            }
        }
        write_metrics_csv(&self.out.join("metrics.csv"), &outcome.runs)?;
        Ok(outcome)
    }
}

/// Reads `metrics.csv` and the run records below `out` and writes
/// `summary.csv`, `series.csv` and `series.svg` next to them.
pub fn write_report(out: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let rows = read_metrics_csv(&out.join("metrics.csv"))?;
    if rows.is_empty() {
        return Err(ExperimentError::Config(format!("{} has no rows", out.join("metrics.csv").display())));
    }
    let summary = summarize(&rows);
    write_summary_csv(&out.join("summary.csv"), &summary)?;
    let records = read_records(out)?;
    let series = series(&records);
    write_series_csv(&out.join("series.csv"), &series)?;
    write_series_svg(&out.join("series.svg"), &series)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert!(matches!("decluttered".parse::<Pipeline>(), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7, 9").unwrap(), vec![7, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn scene_sources() {
        assert_eq!(SceneSource::parse("generated"), SceneSource::Generated { degraded_depth: false });
        assert_eq!(SceneSource::parse("generated-degraded"), SceneSource::Generated { degraded_depth: true });
        assert!(SceneSource::parse("generated-degraded").scene(3).unwrap().degraded_depth);
        assert!(matches!(SceneSource::parse("/nonexistent.toml").scene(0), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExperimentError::Config(String::new()).exit_code(), 2);
        assert_eq!(ExperimentError::Runtime(String::new()).exit_code(), 3);
    }
}
