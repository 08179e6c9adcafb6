//! Scene description, TOML scene files and a seeded scene generator.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NoiseModel, SimError};
use crate::geometry::{Aabb, Pose, Quat, TriangleMesh};

#[derive(Debug, Clone)]
pub struct SceneObject {
    pub id: u32,
    pub name: String,
    pub mesh: Arc<TriangleMesh>,
    pub pose: Pose,
    pub is_target: bool,
    /// Grasp quality when the object is fully visible.
    pub base_quality: f64,
}

impl SceneObject {
    pub fn bounds(&self) -> Aabb {
        self.mesh.bounds_at(&self.pose)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    objects: Vec<SceneObject>,
    pub workspace: Aabb,
    pub table_height: f64,
    pub noise: NoiseModel,
    /// Drop most depth returns from the target (a loose analog of
    /// transparent or reflective objects).
    pub degraded_depth: bool,
}

impl Scene {
    pub fn new(
        name: impl Into<String>,
        objects: Vec<SceneObject>,
        workspace: Aabb,
        table_height: f64,
        noise: NoiseModel,
    ) -> Result<Self, SimError> {
        let scene = Self { name: name.into(), objects, workspace, table_height, noise, degraded_depth: false };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScene(m));
        let targets = self.objects.iter().filter(|o| o.is_target).count();
        if targets != 1 {
            return bad(format!("expected exactly one target, found {targets}"));
        }
        let mut ids: Vec<u32> = self.objects.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("object ids must be unique".into());
        }
        if ids.first() == Some(&0) {
            return bad("object id 0 is reserved for the table".into());
        }
        for o in &self.objects {
            if o.bounds().min.z < self.table_height - 1e-6 {
                return bad(format!("object {} extends below the table", o.id));
            }
            if !(0.0..=1.0).contains(&o.base_quality) {
                return bad(format!("object {} base quality outside [0, 1]", o.id));
            }
        }
        self.noise.validate()
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub(crate) fn object_mut(&mut self, id: u32) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub(crate) fn remove_object(&mut self, id: u32) -> Option<SceneObject> {
        let i = self.objects.iter().position(|o| o.id == id)?;
        Some(self.objects.remove(i))
    }

    pub fn target(&self) -> &SceneObject {
        self.objects.iter().find(|o| o.is_target).expect("validated scene has a target")
    }

    pub fn clutter_ids(&self) -> Vec<u32> {
        self.objects.iter().filter(|o| !o.is_target).map(|o| o.id).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: SceneConfig = toml::from_str(&text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.build(path.parent().unwrap_or(Path::new(".")))
    }

    /// Serialisable description; meshes are written as OBJ paths relative to
    /// the scene file, named after the object.
    pub fn to_config(&self) -> SceneConfig {
        SceneConfig {
            name: self.name.clone(),
            table_height: self.table_height,
            degraded_depth: self.degraded_depth,
            workspace: WorkspaceConfig { min: self.workspace.min.into(), max: self.workspace.max.into() },
            noise: self.noise.clone(),
            objects: self
                .objects
                .iter()
                .map(|o| ObjectConfig {
                    id: o.id,
                    name: o.name.clone(),
                    target: o.is_target,
                    base_quality: o.base_quality,
                    position: o.pose.translation.into(),
                    quaternion: [o.pose.rotation.w, o.pose.rotation.x, o.pose.rotation.y, o.pose.rotation.z],
                    shape: ShapeConfig::Mesh { path: PathBuf::from(format!("{}.obj", o.name)) },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Object geometry: a primitive or an OBJ file (relative to the scene file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeConfig {
    Cuboid { size: [f64; 3] },
    Cylinder { radius: f64, height: f64, #[serde(default = "default_segments")] segments: usize },
    Mesh { path: PathBuf },
}

fn default_segments() -> usize {
    32
}

impl ShapeConfig {
    pub fn build(&self, base: &Path) -> Result<TriangleMesh, SimError> {
        Ok(match self {
            ShapeConfig::Cuboid { size } => TriangleMesh::cuboid(Vector3::from(*size))?,
            ShapeConfig::Cylinder { radius, height, segments } => TriangleMesh::cylinder(*radius, *height, *segments)?,
            ShapeConfig::Mesh { path } => TriangleMesh::load_obj(base.join(path))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectConfig {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub target: bool,
    #[serde(default = "default_quality")]
    pub base_quality: f64,
    pub position: [f64; 3],
    #[serde(default = "identity_wxyz")]
    pub quaternion: [f64; 4],
    pub shape: ShapeConfig,
}

fn default_quality() -> f64 {
    0.9
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub table_height: f64,
    #[serde(default)]
    pub degraded_depth: bool,
    pub workspace: WorkspaceConfig,
    #[serde(default)]
    pub noise: NoiseModel,
    pub objects: Vec<ObjectConfig>,
}

impl SceneConfig {
    pub fn build(&self, base: &Path) -> Result<Scene, SimError> {
        let objects = self
            .objects
            .iter()
            .map(|o| {
                let [w, x, y, z] = o.quaternion;
                let rotation = Quat::new(w, x, y, z).normalized()?;
                let name = if o.name.is_empty() { format!("object{}", o.id) } else { o.name.clone() };
                Ok(SceneObject {
                    id: o.id,
                    name,
                    mesh: Arc::new(o.shape.build(base)?),
                    pose: Pose { rotation, translation: Vector3::from(o.position) },
                    is_target: o.target,
                    base_quality: o.base_quality,
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let workspace = Aabb::new(self.workspace.min.into(), self.workspace.max.into());
        let mut scene = Scene::new(self.name.clone(), objects, workspace, self.table_height, self.noise.clone())?;
        scene.degraded_depth = self.degraded_depth;
        Ok(scene)
    }
}

/// Options of [`generate_scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorParams {
    pub clutter: usize,
    /// Clutter centres lie in this annulus around the target (m).
    pub min_radius: f64,
    pub max_radius: f64,
    pub degraded_depth: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self { clutter: 4, min_radius: 0.08, max_radius: 0.16, degraded_depth: false }
    }
}

fn random_shape(rng: &mut ChaCha8Rng, large: bool) -> (ShapeConfig, f64, f64) {
    let s = if large { 1.3 } else { 1.0 };
    if rng.random_bool(0.5) {
        let size: [f64; 3] = [
            rng.random_range(0.04..0.07) * s,
            rng.random_range(0.05..0.09) * s,
            rng.random_range(0.05..0.10) * s,
        ];
        let footprint = (size[0] * size[0] + size[1] * size[1]).sqrt() / 2.0;
        (ShapeConfig::Cuboid { size }, size[2], footprint)
    } else {
        let radius = rng.random_range(0.02..0.035) * s;
        let height = rng.random_range(0.06..0.11) * s;
        (ShapeConfig::Cylinder { radius, height, segments: 32 }, height, radius)
    }
}

/// Target near the workspace centre surrounded by `clutter` objects with
/// random primitive shapes and yaw, non-overlapping footprints.
pub fn generate_scene(seed: u64, params: &GeneratorParams) -> Result<Scene, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::new();
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let base = Path::new(".");
    for k in 0..=params.clutter {
        let target = k == 0;
        let (shape, height, footprint) = random_shape(&mut rng, target);
        let mut pos = None;
        for _ in 0..1000 {
            let (x, y) = if target {
                (rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02))
            } else {
                let r = rng.random_range(params.min_radius..params.max_radius);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                (placed[0].0 + r * a.cos(), placed[0].1 + r * a.sin())
            };
            if placed.iter().all(|&(px, py, pr)| ((x - px).powi(2) + (y - py).powi(2)).sqrt() > pr + footprint + 0.005) {
                pos = Some((x, y));
                break;
            }
        }
        let Some((x, y)) = pos else {
            return Err(SimError::InvalidScene(format!("could not place object {}", k + 1)));
        };
        placed.push((x, y, footprint));
        let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let q = Quat::from_axis_angle(&Vector3::z(), yaw);
        let cfg = ObjectConfig {
            id: k as u32 + 1,
            name: if target { "target".into() } else { format!("clutter{k}") },
            target,
            base_quality: if target { 0.9 } else { rng.random_range(0.3..0.95) },
            position: [x, y, height / 2.0],
            quaternion: [q.w, q.x, q.y, q.z],
            shape,
        };
        let mesh = cfg.shape.build(base)?;
        objects.push(SceneObject {
            id: cfg.id,
            name: cfg.name,
            mesh: Arc::new(mesh),
            pose: Pose { rotation: q, translation: Vector3::from(cfg.position) },
            is_target: target,
            base_quality: cfg.base_quality,
        });
    }
    let workspace = Aabb::new(Vector3::new(-0.3, -0.3, 0.0), Vector3::new(0.3, 0.3, 0.4));
    let mut scene = Scene::new(format!("generated-{seed}"), objects, workspace, 0.0, NoiseModel::default())?;
    scene.degraded_depth = params.degraded_depth;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = r#"
name = "two"
[workspace]
min = [-0.3, -0.3, 0.0]
max = [0.3, 0.3, 0.4]
[noise]
depth_sigma = 0.001
[[objects]]
id = 1
target = true
position = [0.0, 0.0, 0.05]
shape = { kind = "cuboid", size = [0.05, 0.06, 0.1] }
[[objects]]
id = 2
position = [0.1, 0.0, 0.04]
quaternion = [0.9238795, 0.0, 0.0, 0.3826834]
shape = { kind = "cylinder", radius = 0.03, height = 0.08 }
"#;

    fn parse(text: &str) -> Result<Scene, SimError> {
        let cfg: SceneConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.build(Path::new("."))
    }

    #[test]
    fn parses_scene_file() {
        let s = parse(SCENE).unwrap();
        assert_eq!(s.objects().len(), 2);
        assert_eq!(s.target().id, 1);
        assert_eq!(s.noise.depth_sigma, 0.001);
        assert_eq!(s.clutter_ids(), vec![2]);
    }

    #[test]
    fn rejects_invalid_scenes() {
        assert!(parse(&SCENE.replace("id = 2", "id = 1")).is_err());
        assert!(parse(&SCENE.replace("target = true", "target = false")).is_err());
        assert!(parse(&SCENE.replace("[0.0, 0.0, 0.05]", "[0.0, 0.0, 0.0]")).is_err());
        assert!(matches!(parse("objects = 3"), Err(SimError::Config(_))));
    }

    #[test]
    fn generator_is_seeded_and_valid() {
        let p = GeneratorParams::default();
        for seed in 0..20 {
            let a = generate_scene(seed, &p).unwrap();
            assert_eq!(a.objects().len(), 5);
            let b = generate_scene(seed, &p).unwrap();
            for (x, y) in a.objects().iter().zip(b.objects()) {
                assert_eq!(x.pose, y.pose);
                assert_eq!(x.mesh.vertices(), y.mesh.vertices());
            }
        }
    }
}
