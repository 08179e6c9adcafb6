//! CSV, JSON and SVG writers for run outputs and the cross-run summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::pipeline::{RunOutput, RunRecord};
use super::params::PipelineParams;
use super::{ExperimentError, Pipeline};
use crate::declutter::{attribute_actions, build_graph, extract_detections};
use crate::nbv::Viewpoint;
use crate::sim::{grasp_quality_stub, render_depth, Scene};

/// One metrics CSV row. `stage` is `<pipeline>/<stage>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene: String,
    pub seed: u64,
    pub stage: String,
    #[serde(rename = "err_T_mm")]
    pub err_t_mm: f64,
    #[serde(rename = "err_R_deg")]
    pub err_r_deg: f64,
    pub adi_mm: f64,
}

impl MetricsRow {
    pub fn pipeline(&self) -> Option<Pipeline> {
        self.stage.split('/').next()?.parse().ok()
    }
}

/// Rows for every stage of every run, in run order.
pub fn metrics_rows(runs: &[RunOutput]) -> Vec<MetricsRow> {
    runs.iter()
        .flat_map(|r| {
            r.record.stages.iter().map(move |s| MetricsRow {
                scene: r.record.scene.clone(),
                seed: r.record.seed,
                stage: format!("{}/{}", r.record.pipeline, s.stage),
                err_t_mm: s.metrics.err_t * 1e3,
                err_r_deg: s.metrics.err_r,
                adi_mm: s.metrics.err_adi * 1e3,
            })
        })
        .collect()
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Runtime(e.to_string())
}

pub fn write_metrics_csv(path: &Path, runs: &[RunOutput]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in metrics_rows(runs) {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics CSV; malformed files are configuration errors.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Per-pipeline statistics over the final stage of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub pipeline: String,
    pub runs: usize,
    pub err_t_mm_mean: f64,
    pub err_t_mm_median: f64,
    pub err_t_mm_std: f64,
    pub err_r_deg_median: f64,
    pub adi_mm_mean: f64,
    pub adi_mm_median: f64,
    pub adi_mm_std: f64,
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Final-stage row of each `(pipeline, scene, seed)` run.
pub fn final_rows(rows: &[MetricsRow]) -> BTreeMap<(Pipeline, String, u64), MetricsRow> {
    let mut out = BTreeMap::new();
    for r in rows {
        if let Some(p) = r.pipeline() {
            out.insert((p, r.scene.clone(), r.seed), r.clone());
        }
    }
    out
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut by_pipeline: BTreeMap<Pipeline, Vec<MetricsRow>> = BTreeMap::new();
    for ((p, _, _), r) in final_rows(rows) {
        by_pipeline.entry(p).or_default().push(r);
    }
    by_pipeline
        .into_iter()
        .map(|(p, rs)| {
            let mut t: Vec<f64> = rs.iter().map(|r| r.err_t_mm).collect();
            let mut rot: Vec<f64> = rs.iter().map(|r| r.err_r_deg).collect();
            let mut adi: Vec<f64> = rs.iter().map(|r| r.adi_mm).collect();
            let (t_mean, t_std) = mean_std(&t);
            let (a_mean, a_std) = mean_std(&adi);
            SummaryRow {
                pipeline: p.to_string(),
                runs: rs.len(),
                err_t_mm_mean: t_mean,
                err_t_mm_median: median(&mut t),
                err_t_mm_std: t_std,
                err_r_deg_median: median(&mut rot),
                adi_mm_mean: a_mean,
                adi_mm_median: median(&mut adi),
                adi_mm_std: a_std,
            }
        })
        .collect()
}

pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in summary {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean error after each sensing action, per pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub pipeline: String,
    pub step: usize,
    pub action: String,
    pub runs: usize,
    pub err_t_mm_mean: f64,
    pub err_t_mm_std: f64,
    pub adi_mm_mean: f64,
}

/// Step-aligned trace statistics over all records of each pipeline. The
/// action label is that of the first record reaching the step.
pub fn series(records: &[RunRecord]) -> Vec<SeriesRow> {
    let mut by_pipeline: BTreeMap<Pipeline, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_pipeline.entry(r.pipeline).or_default().push(r);
    }
    let mut out = Vec::new();
    for (p, recs) in by_pipeline {
        let steps = recs.iter().map(|r| r.trace.len()).max().unwrap_or(0);
        for step in 0..steps {
            let points: Vec<_> = recs.iter().filter_map(|r| r.trace.get(step)).collect();
            let t: Vec<f64> = points.iter().map(|tp| tp.err_t * 1e3).collect();
            let (t_mean, t_std) = mean_std(&t);
            out.push(SeriesRow {
                pipeline: p.to_string(),
                step,
                action: points[0].action.clone(),
                runs: points.len(),
                err_t_mm_mean: t_mean,
                err_t_mm_std: t_std,
                adi_mm_mean: points.iter().map(|tp| tp.err_adi * 1e3).sum::<f64>() / points.len() as f64,
            });
        }
    }
    out
}

pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

const COLORS: [&str; 4] = ["#d62728", "#ff7f0e", "#2ca02c", "#1f77b4"];

/// Translation error (mean and one standard deviation) against the action
/// index, one line per pipeline.
pub fn write_series_svg(path: &Path, rows: &[SeriesRow]) -> Result<(), ExperimentError> {
    let (w, h, left, right, bottom, top) = (720.0, 420.0, 60.0, 190.0, 50.0, 20.0);
    let x_max = rows.iter().map(|r| r.step).max().unwrap_or(0).max(1) as f64;
    let y_max = rows.iter().map(|r| r.err_t_mm_mean + r.err_t_mm_std).fold(1.0_f64, f64::max) * 1.05;
    let (pw, ph) = (w - left - right, h - bottom - top);
    let x = |s: f64| left + s / x_max * pw;
    let y = |v: f64| top + ph - v.clamp(0.0, y_max) / y_max * ph;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{0}" stroke="black"/>"#, top + ph);
    let _ = writeln!(svg, r#"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#, top + ph, left + pw);
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, left - 5.0, y(v) + 4.0);
    }
    for s in 0..=x_max as usize {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{s}</text>"#, x(s as f64), top + ph + 16.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">action</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(svg, r#"<text x="15" y="{0:.1}" transform="rotate(-90 15 {0:.1})" text-anchor="middle">translation error (mm)</text>"#, top + ph / 2.0);
    let mut by_pipeline: BTreeMap<&str, Vec<&SeriesRow>> = BTreeMap::new();
    for r in rows {
        by_pipeline.entry(r.pipeline.as_str()).or_default().push(r);
    }
    for (i, (p, rs)) in by_pipeline.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let upper: Vec<String> = rs.iter().map(|r| format!("{:.1},{:.1}", x(r.step as f64), y(r.err_t_mm_mean + r.err_t_mm_std))).collect();
        let lower: Vec<String> = rs.iter().rev().map(|r| format!("{:.1},{:.1}", x(r.step as f64), y(r.err_t_mm_mean - r.err_t_mm_std))).collect();
        let _ = writeln!(svg, r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15"/>"#, upper.join(" "), lower.join(" "));
        let line: Vec<String> = rs.iter().map(|r| format!("{:.1},{:.1}", x(r.step as f64), y(r.err_t_mm_mean))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for r in rs {
            let shape = if r.action == "touch" { "rect" } else { "circle" };
            let (cx, cy) = (x(r.step as f64), y(r.err_t_mm_mean));
            if shape == "rect" {
                let _ = writeln!(svg, r#"<rect x="{:.1}" y="{:.1}" width="6" height="6" fill="{color}"/>"#, cx - 3.0, cy - 3.0);
            } else {
                let _ = writeln!(svg, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = top + 20.0 + 20.0 * i as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{p}</text>"#, lx + 25.0, ly + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}">circle: view, square: touch</text>"#, left + pw + 15.0, top + 110.0);
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), ExperimentError> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Directory of one run below `out`.
pub fn run_dir(out: &Path, pipeline: Pipeline, scene: &str, seed: u64) -> PathBuf {
    out.join(pipeline.name()).join(format!("{scene}_seed{seed}"))
}

/// Configuration snapshot stored with every run.
#[derive(Debug, Clone, Serialize)]
struct ConfigSnapshot<'a> {
    scene: &'a str,
    pipeline: Pipeline,
    seed: u64,
    params: &'a PipelineParams,
}

/// Written instead of a record when a run aborts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub scene: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub error: String,
    pub exit_code: i32,
}

/// Writes one run into [`run_dir`] and returns the directory.
pub fn write_run_dir(out: &Path, run: &RunOutput, params: &PipelineParams) -> Result<PathBuf, ExperimentError> {
    let r = &run.record;
    let dir = run_dir(out, r.pipeline, &r.scene, r.seed);
    fs::create_dir_all(&dir)?;
    write_json(dir.join("config.json"), &ConfigSnapshot { scene: &r.scene, pipeline: r.pipeline, seed: r.seed, params })?;
    write_json(dir.join("record.json"), r)?;
    let a = &run.artifacts;
    if let Some(reg) = &a.registration {
        write_json(dir.join("registration.json"), reg)?;
    }
    if let Some(grid) = &a.grid {
        write_json(dir.join("grid.json"), grid)?;
    }
    if !a.nbv_trace.is_empty() {
        write_json(dir.join("nbv_trace.json"), &a.nbv_trace)?;
    }
    if !a.nbt_trace.is_empty() {
        write_json(dir.join("nbt_trace.json"), &a.nbt_trace)?;
    }
    if !a.plans.is_empty() {
        write_json(dir.join("plans.json"), &a.plans)?;
    }
    if let Some(dot) = &a.graph_dot {
        fs::write(dir.join("graph.dot"), dot)?;
    }
    if !a.target_cloud.is_empty() {
        a.target_cloud.write_xyz(dir.join("target.xyz"))?;
    }
    Ok(dir)
}

pub fn write_failure(out: &Path, failure: &RunFailure) -> Result<PathBuf, ExperimentError> {
    let dir = run_dir(out, failure.pipeline, &failure.scene, failure.seed);
    fs::create_dir_all(&dir)?;
    write_json(dir.join("failure.json"), failure)?;
    Ok(dir)
}

/// Renders `scene` from the home view and from above and writes the scene
/// description, meshes, the home-view cloud, both label masks (PGM and RLE
/// JSON) and the declutter graph of the top-down view into `out`.
pub fn write_scene_render(scene: &Scene, params: &PipelineParams, seed: u64, out: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(out)?;
    let cfg = scene.to_config();
    fs::write(out.join("scene.toml"), toml::to_string(&cfg).map_err(|e| ExperimentError::Runtime(e.to_string()))?)?;
    for o in scene.objects() {
        fs::write(out.join(format!("{}.obj", o.name)), o.mesh.to_obj())?;
    }
    let look = Vector3::new(0.0, 0.0, scene.table_height + 0.05);
    let home = Viewpoint::look_at(Vector3::from(params.vision.home_view), &look)?;
    let img = render_depth(scene, &home, &params.vision.camera, seed);
    img.cloud().write_xyz(out.join("home_view.xyz"))?;
    let mask = img.mask();
    fs::write(out.join("home_mask.pgm"), mask.to_pgm())?;
    fs::write(out.join("home_mask.json"), mask.to_rle_json())?;

    let d = &params.declutter;
    let c = scene.workspace.center();
    let below = Vector3::new(c.x, c.y, scene.table_height);
    let top = Viewpoint::look_at(below + Vector3::z() * d.camera_height, &below)?;
    let img = render_depth(scene, &top, &d.camera, seed);
    let mask = img.mask();
    fs::write(out.join("top_mask.pgm"), mask.to_pgm())?;
    fs::write(out.join("top_mask.json"), mask.to_rle_json())?;
    let mut dets = extract_detections(&mask)?;
    for det in dets.iter_mut() {
        let (q, pose) = grasp_quality_stub(scene, det.id, &img)?;
        det.grasp_quality = q;
        det.grasp_pose = pose;
    }
    let mut graph = build_graph(&dets, scene.target().id, &d.rules, mask.diagonal())?;
    attribute_actions(&mut graph, d.rules.mu_q);
    fs::write(out.join("graph.dot"), graph.to_dot())?;
    Ok(())
}

/// Every `record.json` two levels below `out`, in path order.
pub fn read_records(out: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut paths = Vec::new();
    for p in fs::read_dir(out)? {
        let p = p?.path();
        if p.is_dir() {
            for r in fs::read_dir(&p)? {
                let f = r?.path().join("record.json");
                if f.is_file() {
                    paths.push(f);
                }
            }
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f)?;
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", f.display())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(stage: &str, seed: u64, adi: f64) -> MetricsRow {
        MetricsRow { scene: "s".into(), seed, stage: stage.into(), err_t_mm: adi, err_r_deg: 1.0, adi_mm: adi }
    }

    #[test]
    fn summary_uses_final_stage() {
        let rows = vec![
            row("full/initial-view", 0, 10.0),
            row("full/tactile", 0, 2.0),
            row("full/initial-view", 1, 12.0),
            row("full/tactile", 1, 4.0),
            row("static/initial-view", 0, 9.0),
        ];
        let s = summarize(&rows);
        let full = s.iter().find(|r| r.pipeline == "full").unwrap();
        assert_eq!(full.runs, 2);
        assert!((full.adi_mm_median - 3.0).abs() < 1e-12);
        assert!((full.adi_mm_std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metrics_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![row("static/initial-view", 3, 1.5)];
        let mut w = csv::Writer::from_path(&path).unwrap();
        w.serialize(&rows[0]).unwrap();
        w.flush().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("scene,seed,stage,err_T_mm,err_R_deg,adi_mm"));
        assert_eq!(read_metrics_csv(&path).unwrap(), rows);
    }
}
