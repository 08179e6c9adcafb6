//! The four ablation pipelines.

use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::PipelineParams;
use super::{ExperimentError, Pipeline};
use crate::declutter::{
    attribute_actions, build_graph, extract_detections, next_object, plan_grasp, plan_push, relation_weight,
    ActionKind, DiscardZone, NextObject, Plan,
};
use crate::geometry::{ray_mesh_intersect, sample_mesh_surface, Aabb, KdTree, PointCloud, Pose, Quat, TriangleMesh};
use crate::nbt::{sample_touch_actions, select_nbt, should_stop, NbtError, NbtTraceStep, TouchAction};
use crate::nbv::{sample_viewpoints, select_nbv, GridDump, OccupancyGrid, Viewpoint};
use crate::sim::{
    apply_grasp_removal, apply_push, compute_metrics, grasp_quality_stub, mix_seed, render_depth, simulate_touch,
    DepthImage, MetricsReport, Scene,
};
use crate::tiqf::{register_to_surface_with_prior, FilterState, Registration, RegistrationReport, Tiqf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub metrics: MetricsReport,
    /// Iterations of the registration that produced the stage estimate.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum ActionRecord {
    View { step: usize, position: [f64; 3], gain: f64 },
    Grasp { object: u32 },
    Push { object: u32, direction: [f64; 3], clamped: bool },
    Touch { step: usize, origin: [f64; 3], direction: [f64; 3], contact: Option<u32>, kl: Option<f64> },
}

/// Error after one sensing action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub action: String,
    pub err_t: f64,
    pub err_adi: f64,
}

/// One step of the view planner, for the JSON trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbvTraceStep {
    pub step: usize,
    pub candidate_count: usize,
    pub chosen_position: [f64; 3],
    pub gain: f64,
    pub grid_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scene: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub actions: Vec<ActionRecord>,
    pub trace: Vec<TracePoint>,
    pub declutter_count: usize,
    pub views: usize,
    pub touches: usize,
    /// Excluded from every deterministic output.
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn final_metrics(&self) -> Option<&MetricsReport> {
        self.stages.last().map(|s| &s.metrics)
    }
}

/// Side outputs written next to the record.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub graph_dot: Option<String>,
    pub plans: Vec<Plan>,
    pub nbv_trace: Vec<NbvTraceStep>,
    pub nbt_trace: Vec<NbtTraceStep>,
    pub grid: Option<GridDump>,
    pub registration: Option<RegistrationReport>,
    pub target_cloud: PointCloud,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub artifacts: RunArtifacts,
}

struct Ctx<'a> {
    params: &'a PipelineParams,
    gt: Pose,
    metric_model: PointCloud,
    record: RunRecord,
    artifacts: RunArtifacts,
}

impl Ctx<'_> {
    fn metrics(&self, est: &Pose) -> MetricsReport {
        compute_metrics(est, &self.gt, &self.metric_model)
    }

    fn trace(&mut self, action: &str, est: &Pose) {
        let m = self.metrics(est);
        let step = self.record.trace.len();
        self.record.trace.push(TracePoint { step, action: action.into(), err_t: m.err_t, err_adi: m.err_adi });
    }

    fn stage(&mut self, name: &str, reg: &Registration) {
        let metrics = self.metrics(&reg.pose);
        self.record.stages.push(StageRecord { stage: name.into(), metrics, iterations: reg.iterations });
        self.artifacts.registration = Some(reg.report());
    }
}

/// Runs `pipeline` on a copy of `scene`.
pub fn run_pipeline(
    scene: &Scene,
    pipeline: Pipeline,
    params: &PipelineParams,
    seed: u64,
) -> Result<RunOutput, ExperimentError> {
    params.validate()?;
    let start = Instant::now();
    let mut scene = scene.clone();
    let target = scene.target().clone();
    let metric_model = sample_mesh_surface(&target.mesh, params.metric_points, mix_seed(seed, 0xad1))?;
    let mut ctx = Ctx {
        params,
        gt: target.pose,
        metric_model,
        record: RunRecord {
            scene: scene.name.clone(),
            pipeline,
            seed,
            stages: Vec::new(),
            actions: Vec::new(),
            trace: Vec::new(),
            declutter_count: 0,
            views: 0,
            touches: 0,
            wall_time_s: 0.0,
        },
        artifacts: RunArtifacts::default(),
    };
    if matches!(pipeline, Pipeline::DeclutterActiveVision | Pipeline::Full) {
        declutter_stage(&mut scene, seed, &mut ctx)?;
    }
    let tiqf_params = crate::tiqf::TiqfParams { seed: mix_seed(seed, params.tiqf.seed), ..params.tiqf.clone() };
    let engine = Tiqf::new(&target.mesh, tiqf_params)?;
    let vision = vision_stage(&scene, &engine, pipeline != Pipeline::Static, seed, &mut ctx)?;
    if pipeline == Pipeline::Full {
        let outcome = run_tactile(&scene, &target.mesh, vision.pose, params, seed)?;
        for (i, a) in outcome.actions.iter().enumerate() {
            ctx.record.actions.push(a.clone());
            if let Some(p) = outcome.estimate_after(i + 1) {
                ctx.trace("touch", &p);
            }
        }
        ctx.record.touches = outcome.touches;
        ctx.artifacts.nbt_trace = outcome.trace.clone();
        match &outcome.registration {
            Some(reg) => ctx.stage("tactile", reg),
            None => log::warn!("no tactile estimate; keeping the vision estimate"),
        }
    }
    ctx.record.wall_time_s = start.elapsed().as_secs_f64();
    Ok(RunOutput { record: ctx.record, artifacts: ctx.artifacts })
}

fn top_down_view(scene: &Scene, height: f64) -> Result<Viewpoint, ExperimentError> {
    let c = scene.workspace.center();
    let look = Vector3::new(c.x, c.y, scene.table_height);
    Ok(Viewpoint::look_at(look + Vector3::z() * height, &look)?)
}

fn declutter_stage(scene: &mut Scene, seed: u64, ctx: &mut Ctx) -> Result<(), ExperimentError> {
    let p = &ctx.params.declutter;
    let view = top_down_view(scene, p.camera_height)?;
    let focal_px = p.camera.ray_cols as f64 / 2.0 / (p.camera.hfov_deg.to_radians() / 2.0).tan();
    let gripper_px = p.gripper_length * focal_px / p.camera_height;
    let ws = scene.workspace;
    let mut zone = DiscardZone::row(Vector3::new(ws.max.x + 0.15, ws.min.y, scene.table_height), 0.1, p.discard_slots);
    let target_id = scene.target().id;
    for step in 0..p.action_budget {
        let img = render_depth(scene, &view, &p.camera, mix_seed(seed, 0xdec0 + step as u64));
        let mask = img.mask();
        let mut dets = extract_detections(&mask)?;
        for d in dets.iter_mut() {
            let (q, pose) = grasp_quality_stub(scene, d.id, &img)?;
            d.grasp_quality = q;
            d.grasp_pose = pose;
        }
        let mut graph = build_graph(&dets, target_id, &p.rules, mask.diagonal())?;
        attribute_actions(&mut graph, p.rules.mu_q);
        if step == 0 {
            ctx.artifacts.graph_dot = Some(graph.to_dot());
        }
        let root = graph.vertex(target_id).expect("target in graph").clone();
        let related = graph.vertices().any(|v| v.id != target_id && relation_weight(&root, v, &p.rules, mask.diagonal()).0 > 0.0);
        if !related {
            break;
        }
        let NextObject::Remove { id, action, .. } = next_object(&graph) else { break };
        let det = graph.vertex(id).expect("leaf in graph").clone();
        let grasped = action == ActionKind::Grasp && try_grasp(scene, &det, &mut zone, &img, ctx)?;
        if !grasped {
            let plan = plan_push(&mask, id, &dets, gripper_px, p.push_samples, mix_seed(seed, 0x9054 + step as u64))?
                .lifted(&img);
            let out = apply_push(scene, id, &plan)?;
            let d = plan.direction_world.unwrap_or_else(Vector3::zeros);
            ctx.record.actions.push(ActionRecord::Push { object: id, direction: d.into(), clamped: out.clamped });
            ctx.artifacts.plans.push(Plan::Push(plan));
        }
    }
    Ok(())
}

fn try_grasp(
    scene: &mut Scene,
    det: &crate::declutter::Detection,
    zone: &mut DiscardZone,
    img: &DepthImage,
    ctx: &mut Ctx,
) -> Result<bool, ExperimentError> {
    match plan_grasp(det, zone, img) {
        Ok(plan) => {
            apply_grasp_removal(scene, det.id)?;
            ctx.record.declutter_count += 1;
            ctx.record.actions.push(ActionRecord::Grasp { object: det.id });
            ctx.artifacts.plans.push(Plan::Grasp(plan));
            Ok(true)
        }
        Err(e) => {
            log::warn!("grasp of object {} failed ({e}); pushing instead", det.id);
            Ok(false)
        }
    }
}

/// Drops points farther than `radius` from the coordinate-wise median,
/// which removes stray background returns at mask borders.
fn gate_to_median(cloud: PointCloud, radius: f64) -> PointCloud {
    if cloud.is_empty() {
        return cloud;
    }
    let median = |k: usize| {
        let mut v: Vec<f64> = cloud.points().iter().map(|p| p[k]).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let m = Vector3::new(median(0), median(1), median(2));
    let kept = cloud.into_points().into_iter().filter(|p| (p - m).norm() <= radius).collect();
    PointCloud::new(kept).expect("subset of a valid cloud")
}

/// Registration from several yaw hypotheses about the vertical axis; the
/// result with the smallest mean closest-point residual wins.
fn register_multi_start(engine: &Tiqf, cloud: &PointCloud, hypotheses: usize) -> Result<Registration, ExperimentError> {
    let tree = KdTree::from_cloud(engine.model_cloud())?;
    let sc = cloud.centroid().unwrap_or_else(Vector3::zeros);
    let mc = engine.model_cloud().centroid().unwrap_or_else(Vector3::zeros);
    let mut best: Option<(f64, Registration)> = None;
    for k in 0..hypotheses.max(1) {
        let q = Quat::from_axis_angle(&Vector3::z(), std::f64::consts::TAU * k as f64 / hypotheses.max(1) as f64);
        let init = Pose { rotation: q, translation: sc - q.rotate(&mc) };
        let reg = engine.register(cloud, Some(init))?;
        let inv = reg.pose.inverse();
        let score = cloud.points().iter().map(|s| tree.nearest(&inv.transform_point(s)).1.sqrt()).sum::<f64>()
            / cloud.len() as f64;
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, reg));
        }
    }
    Ok(best.expect("at least one hypothesis").1)
}

fn vision_stage(
    scene: &Scene,
    engine: &Tiqf,
    active: bool,
    seed: u64,
    ctx: &mut Ctx,
) -> Result<Registration, ExperimentError> {
    let vp = ctx.params.vision.clone();
    let target = scene.target().id;
    let diameter = Aabb::from_points(engine.model_cloud().points().iter()).map_or(0.0, |b| b.extent().norm());
    let segment = |img: &DepthImage| {
        let cloud = img.segmented_cloud(target, scene.noise.seg_bleed_px, scene.table_height, vp.table_margin);
        gate_to_median(cloud, diameter)
    };
    let look = Vector3::new(0.0, 0.0, scene.table_height + 0.05);
    let home = Viewpoint::look_at(Vector3::from(vp.home_view), &look)?;
    let img = render_depth(scene, &home, &vp.camera, mix_seed(seed, 0x71e0));
    let mut cloud = segment(&img);
    if cloud.len() < crate::tiqf::MIN_SCENE_POINTS {
        return Err(ExperimentError::Runtime(format!("target barely visible from the home view ({} points)", cloud.len())));
    }
    ctx.record.views = 1;
    ctx.record.actions.push(ActionRecord::View { step: 0, position: home.position.into(), gain: 0.0 });
    let mut reg = register_multi_start(engine, &cloud, vp.yaw_hypotheses)?;
    ctx.trace("view", &reg.pose);
    ctx.stage("initial-view", &reg);
    if !active {
        ctx.artifacts.target_cloud = cloud;
        return Ok(reg);
    }

    let centroid = cloud.centroid().expect("non-empty cloud");
    let mut grid = OccupancyGrid::around(centroid, vp.grid_margin, vp.grid_resolution)?;
    grid.integrate_measurement(&home.position, img.cloud().points())?;
    let view_space = Aabb::new(
        Vector3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, scene.table_height + 0.1),
        Vector3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
    );
    let mut history = vec![reg.pose];
    for step in 1..vp.view_budget {
        let cands = sample_viewpoints(&centroid, vp.radius, vp.candidates, mix_seed(seed, 0x5a3 + step as u64), &view_space)?;
        let entropy = grid.entropy();
        let (idx, gain) = select_nbv(&grid, &cands, &vp.planning_sensor)?;
        let view = &cands[idx];
        ctx.artifacts.nbv_trace.push(NbvTraceStep {
            step,
            candidate_count: cands.len(),
            chosen_position: view.position.into(),
            gain,
            grid_entropy: entropy,
        });
        ctx.record.actions.push(ActionRecord::View { step, position: view.position.into(), gain });
        let img = render_depth(scene, view, &vp.camera, mix_seed(seed, 0x71e0 + step as u64));
        grid.integrate_measurement(&view.position, img.cloud().points())?;
        cloud.extend(&segment(&img));
        ctx.record.views += 1;
        reg = engine.register(&cloud, Some(reg.pose))?;
        ctx.trace("view", &reg.pose);
        history.push(reg.pose);
        if should_stop(&history, &ctx.params.stop) {
            break;
        }
    }
    ctx.stage("active-vision", &reg);
    ctx.artifacts.grid = Some(grid.dump());
    ctx.artifacts.target_cloud = cloud;
    Ok(reg)
}

/// A touch ray together with the length along it known to be free of the
/// target: everything before the first contact, or the whole ray on a miss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeRay {
    pub action: TouchAction,
    /// Metres along the ray; infinite for a miss.
    pub clear: f64,
}

/// Outcome of the touch stage.
#[derive(Debug, Clone)]
pub struct TactileOutcome {
    /// `(touches so far, estimate)` after every re-estimation.
    pub estimates: Vec<(usize, Pose)>,
    pub registration: Option<Registration>,
    pub contacts: PointCloud,
    /// Free-space evidence of every executed touch.
    pub free_rays: Vec<FreeRay>,
    pub touches: usize,
    pub actions: Vec<ActionRecord>,
    pub trace: Vec<NbtTraceStep>,
}

impl TactileOutcome {
    /// Latest estimate available after `touches` touches.
    pub fn estimate_after(&self, touches: usize) -> Option<Pose> {
        self.estimates.iter().rev().find(|(n, _)| *n <= touches).map(|(_, p)| *p)
    }
}

/// Unit vectors spanning the plane orthogonal to `d`.
fn lateral_axes(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let u = d.cross(&Vector3::x()).try_normalize(1e-9).unwrap_or_else(|| d.cross(&Vector3::y()).normalize());
    (u, d.cross(&u))
}

/// Closest model hit among the ray and four copies offset sideways by
/// `margin`, or `None` if any of them misses.
fn farthest_lateral_hit(action: &TouchAction, mesh: &TriangleMesh, pose: &Pose, margin: f64) -> Option<f64> {
    let d = action.ray.direction;
    let (u, v) = lateral_axes(&d);
    let mut far: f64 = 0.0;
    for off in [Vector3::zeros(), u, -u, v, -v] {
        let ray = crate::geometry::Ray { origin: action.ray.origin + off * margin, direction: d };
        let (_, t) = ray_mesh_intersect(&ray, mesh, pose)?;
        far = far.max(t);
    }
    Some(far)
}

/// Touch rays executable above the table. Rays that would still hit the
/// model at `estimate` when shifted sideways by `robust_margin` are kept
/// when there are any, so that small estimate errors do not turn the chosen
/// touch into a miss.
fn touch_candidates(
    scene: &Scene,
    mesh: &TriangleMesh,
    estimate: &Pose,
    params: &PipelineParams,
    standoff: f64,
    seed: u64,
) -> Result<Vec<TouchAction>, ExperimentError> {
    let all = sample_touch_actions(estimate, mesh, params.tactile.per_face, standoff, seed)?;
    let above: Vec<TouchAction> = all.into_iter().filter(|a| a.ray.origin.z > scene.table_height + 1e-3).collect();
    let margin = params.tactile.robust_margin;
    if margin <= 0.0 {
        return Ok(above);
    }
    let robust: Vec<TouchAction> =
        above.iter().copied().filter(|a| farthest_lateral_hit(a, mesh, estimate, margin).is_some()).collect();
    Ok(if robust.is_empty() { above } else { robust })
}

fn contact_rms(contacts: &PointCloud, mesh: &TriangleMesh, pose: &Pose) -> f64 {
    let inv = pose.inverse();
    let sum: f64 = contacts
        .points()
        .iter()
        .map(|s| {
            let local = inv.transform_point(s);
            (mesh.closest_point(&local) - local).norm_squared()
        })
        .sum();
    (sum / contacts.len() as f64).sqrt()
}

/// Free rays that the model at `pose` blocks squarely: the ray and four
/// copies offset sideways by `margin` all hit it inside the free stretch.
fn contradicted(free_rays: &[FreeRay], mesh: &TriangleMesh, pose: &Pose, margin: f64) -> usize {
    free_rays
        .iter()
        .filter(|f| farthest_lateral_hit(&f.action, mesh, pose, margin).is_some_and(|t| t < f.clear))
        .count()
}

/// Surface registration from `init`. If the result contradicts the free
/// space seen by earlier touches or fits the contacts poorly, it is retried
/// from yaw alternatives about the vertical axis combined with shifted
/// translations; the fewest contradictions, then the smallest residual, wins.
fn register_contacts(
    contacts: &PointCloud,
    free_rays: &[FreeRay],
    mesh: &TriangleMesh,
    init: Pose,
    tp: &super::params::TactileParams,
) -> Result<Registration, ExperimentError> {
    let score = |pose: &Pose| (contradicted(free_rays, mesh, pose, tp.miss_margin), contact_rms(contacts, mesh, pose));
    let fit = |start: Pose| {
        let prior = FilterState::initial(start.rotation, tp.prior_scale);
        register_to_surface_with_prior(contacts, mesh, start, &prior, &tp.tiqf)
    };
    let reg = fit(init)?;
    let base = score(&reg.pose);
    if base.0 == 0 && base.1 <= tp.reinit_residual {
        return Ok(reg);
    }
    let local_center = mesh.bounds().center();
    let center = init.transform_point(&local_center);
    let s = tp.reinit_shift;
    let mut shifts = vec![Vector3::zeros()];
    if s > 0.0 {
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut v = Vector3::zeros();
                v[axis] = sign * s;
                shifts.push(v);
            }
        }
    }
    let yaws = tp.reinit_yaws.max(1);
    let mut best = (base, reg);
    for k in 0..yaws {
        let rz = Quat::from_axis_angle(&Vector3::z(), std::f64::consts::TAU * k as f64 / yaws as f64);
        let rotation = rz * init.rotation;
        for shift in &shifts {
            if k == 0 && shift.norm() == 0.0 {
                continue;
            }
            let start = Pose { rotation, translation: center + shift - rotation.rotate(&local_center) };
            let cand = fit(start)?;
            let sc = score(&cand.pose);
            if sc.0 < best.0 .0 || (sc.0 == best.0 .0 && sc.1 < best.0 .1) {
                best = (sc, cand);
            }
        }
    }
    log::debug!("contact check {base:?}; re-initialised to {:?}", best.0);
    Ok(best.1)
}

/// Random bootstrap touches followed by next-best-touch selection, starting
/// from the pose `init`. Each re-estimation registers all target contacts
/// from `init` with a fresh belief.
pub fn run_tactile(
    scene: &Scene,
    mesh: &TriangleMesh,
    init: Pose,
    params: &PipelineParams,
    seed: u64,
) -> Result<TactileOutcome, ExperimentError> {
    params.validate()?;
    let target = scene.target().id;
    let tp = &params.tactile;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xb007));
    let mut out = TactileOutcome {
        estimates: Vec::new(),
        registration: None,
        contacts: PointCloud::empty(),
        free_rays: Vec::new(),
        touches: 0,
        actions: Vec::new(),
        trace: Vec::new(),
    };
    let mut estimate = init;
    let mut history: Vec<Pose> = Vec::new();
    let touch = |action: &TouchAction, kl: Option<f64>, out: &mut TactileOutcome| -> Result<(), ExperimentError> {
        let contact = simulate_touch(scene, action, mix_seed(seed, 0x70c4 + out.touches as u64));
        out.touches += 1;
        out.actions.push(ActionRecord::Touch {
            step: out.touches,
            origin: action.ray.origin.into(),
            direction: action.ray.direction.into(),
            contact: contact.map(|c| c.id),
            kl,
        });
        let clear = match contact {
            Some(c) => {
                let depth = (c.point - action.ray.origin).dot(&action.ray.direction);
                if c.id == target {
                    out.contacts.push(c.point)?;
                    depth - tp.miss_margin
                } else {
                    log::debug!("touch {} stopped on object {}", out.touches, c.id);
                    depth
                }
            }
            None => {
                log::debug!("touch {} found nothing", out.touches);
                f64::INFINITY
            }
        };
        out.free_rays.push(FreeRay { action: *action, clear });
        Ok(())
    };
    while out.contacts.len() < tp.bootstrap && out.touches < tp.touch_budget {
        let cands = touch_candidates(scene, mesh, &estimate, params, tp.standoff, mix_seed(seed, 0xca0 + out.touches as u64))?;
        let a = cands[rng.random_range(0..cands.len())];
        touch(&a, None, &mut out)?;
    }
    if out.contacts.len() < tp.bootstrap {
        return Ok(out);
    }
    let mut state = None;
    let mut registered = 0;
    loop {
        if out.contacts.len() > registered {
            registered = out.contacts.len();
            let reg = register_contacts(&out.contacts, &out.free_rays, mesh, init, tp)?;
            estimate = reg.pose;
            out.estimates.push((out.touches, estimate));
            history.push(estimate);
            state = Some(reg.state.clone());
            out.registration = Some(reg);
            if should_stop(&history, &params.stop) {
                break;
            }
        }
        if out.touches >= tp.touch_budget {
            break;
        }
        let state = state.as_ref().expect("registered after bootstrap");
        let mut chosen = None;
        for standoff in [tp.standoff, 2.0 * tp.standoff] {
            let cands = touch_candidates(scene, mesh, &estimate, params, standoff, mix_seed(seed, 0xca0 + out.touches as u64))?;
            match select_nbt(state, &cands, mesh, &estimate, &out.contacts, tp.tiqf.rho) {
                Ok((i, kl)) => {
                    chosen = Some((cands[i], kl, cands.len()));
                    break;
                }
                Err(NbtError::AllMiss) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        let Some((action, kl, n)) = chosen else {
            log::warn!("no touch candidate predicts a contact; stopping");
            break;
        };
        out.trace.push(NbtTraceStep {
            step: out.touches + 1,
            candidate_count: n,
            chosen_origin: action.ray.origin.into(),
            chosen_direction: action.ray.direction.into(),
            kl,
            posterior_trace: state.covariance_trace(),
        });
        touch(&action, Some(kl), &mut out)?;
    }
    Ok(out)
}
