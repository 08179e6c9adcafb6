//! Triangle meshes: construction, OBJ ingestion, primitives, ray casting and
//! area-weighted surface sampling.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bvh::Bvh;
use super::{Aabb, GeometryError, PointCloud, Pose, Ray};

/// Faces whose doubled area falls below this are dropped on construction.
const DEGENERATE_AREA2: f64 = 1e-14;

/// Hits closer than this to the ray origin count as misses.
pub const HIT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vector3<f64>,
    pub distance: f64,
    pub face: usize,
}

/// Indexed triangle mesh with a bounding-volume hierarchy built at
/// construction. Immutable afterwards.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    bvh: Bvh,
}

impl TriangleMesh {
    /// Validates indices and drops zero-area faces.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinitePoint(i));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(GeometryError::FaceIndexOutOfRange { face: fi, index: bad });
            }
        }
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| {
                let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
                (b - a).cross(&(c - a)).norm_squared() > DEGENERATE_AREA2 * DEGENERATE_AREA2
            })
            .collect();
        if faces.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let bvh = Bvh::build(&vertices, &faces);
        Ok(Self { vertices, faces, bvh })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [Vector3<f64>; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Bounds of the mesh in its own frame.
    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter()).expect("mesh has vertices")
    }

    /// World-frame bounds of the mesh placed at `pose`.
    pub fn bounds_at(&self, pose: &Pose) -> Aabb {
        Aabb::from_points(self.vertices.iter().map(|v| pose.transform_point(v)).collect::<Vec<_>>().iter())
            .expect("mesh has vertices")
    }

    /// Nearest hit in front of the ray origin, using the hierarchy.
    pub fn intersect_local(&self, ray: &Ray) -> Option<RayHit> {
        self.bvh.intersect(&self.vertices, &self.faces, ray)
    }

    /// Same contract as [`Self::intersect_local`] by scanning every face.
    pub fn intersect_brute_force(&self, ray: &Ray) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        for (fi, f) in self.faces.iter().enumerate() {
            if let Some(t) = ray_triangle(ray, &self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]) {
                if best.is_none_or(|b| t < b.distance) {
                    best = Some(RayHit { point: ray.at(t), distance: t, face: fi });
                }
            }
        }
        best
    }

    /// Closest surface point to `p` (mesh frame), by scanning every face.
    pub fn closest_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let mut best = self.vertices[self.faces[0][0]];
        let mut best_d = f64::INFINITY;
        for f in &self.faces {
            let q = closest_on_triangle(p, &self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]);
            let d = (q - p).norm_squared();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    pub fn parse_obj(text: &str) -> Result<Self, GeometryError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut tok = line.split_whitespace();
            let err = |message: String| GeometryError::Parse { line: lineno + 1, message };
            match tok.next() {
                Some("v") => {
                    let v: Vec<f64> = tok
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|e| err(e.to_string())))
                        .collect::<Result<_, _>>()?;
                    if v.len() != 3 {
                        return Err(err("vertex needs three coordinates".into()));
                    }
                    vertices.push(Vector3::new(v[0], v[1], v[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = tok
                        .map(|s| {
                            let head = s.split('/').next().unwrap_or("");
                            match head.parse::<i64>() {
                                Ok(i) if i >= 1 => Ok(i as usize - 1),
                                _ => Err(err(format!("bad face index `{s}`"))),
                            }
                        })
                        .collect::<Result<_, _>>()?;
                    if idx.len() < 3 {
                        return Err(err("face needs at least three vertices".into()));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Self, GeometryError> {
        Self::parse_obj(&std::fs::read_to_string(path)?)
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    /// Axis-aligned box centred at the origin with outward-facing triangles.
    pub fn cuboid(size: Vector3<f64>) -> Result<Self, GeometryError> {
        let h = size / 2.0;
        let vertices = (0..8)
            .map(|i| {
                Vector3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        Self::new(vertices, faces)
    }

    /// Closed cylinder about the z axis, centred at the origin.
    pub fn cylinder(radius: f64, height: f64, segments: usize) -> Result<Self, GeometryError> {
        let n = segments.max(3);
        let h = height / 2.0;
        let mut vertices = Vec::with_capacity(2 * n + 2);
        for k in 0..n {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            let (s, c) = a.sin_cos();
            vertices.push(Vector3::new(radius * c, radius * s, -h));
            vertices.push(Vector3::new(radius * c, radius * s, h));
        }
        let (bottom, top) = (2 * n, 2 * n + 1);
        vertices.push(Vector3::new(0.0, 0.0, -h));
        vertices.push(Vector3::new(0.0, 0.0, h));
        let mut faces = Vec::with_capacity(4 * n);
        for k in 0..n {
            let (b0, t0) = (2 * k, 2 * k + 1);
            let (b1, t1) = (2 * ((k + 1) % n), 2 * ((k + 1) % n) + 1);
            faces.push([b0, b1, t1]);
            faces.push([b0, t1, t0]);
            faces.push([bottom, b1, b0]);
            faces.push([top, t0, t1]);
        }
        Self::new(vertices, faces)
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region test).
pub(crate) fn closest_on_triangle(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Möller–Trumbore; returns the ray parameter of a hit beyond [`HIT_EPSILON`].
pub(crate) fn ray_triangle(ray: &Ray, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.direction.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= HIT_EPSILON).then_some(t)
}

/// Nearest hit of a world-frame ray with `mesh` placed at `mesh_pose`.
pub fn ray_mesh_intersect(ray: &Ray, mesh: &TriangleMesh, mesh_pose: &Pose) -> Option<(Vector3<f64>, f64)> {
    let inv = mesh_pose.inverse();
    let local = Ray::from_unit(inv.transform_point(&ray.origin), inv.transform_vector(&ray.direction));
    mesh.intersect_local(&local).map(|h| (ray.at(h.distance), h.distance))
}

/// `n` points drawn area-weighted over faces and uniformly within each face.
pub fn sample_mesh_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud, GeometryError> {
    if n == 0 {
        return Err(GeometryError::InvalidArgument("sample count must be at least 1".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|f| mesh.face_area(f)).collect();
    let dist = WeightedIndex::new(&areas).map_err(|_| GeometryError::EmptyMesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let [a, b, c] = mesh.triangle(dist.sample(&mut rng));
        let r1: f64 = rng.random::<f64>().sqrt();
        let r2: f64 = rng.random();
        points.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Quat;
    use approx::assert_relative_eq;

    #[test]
    fn closest_point_on_cube() {
        let m = TriangleMesh::cuboid(Vector3::new(1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(m.closest_point(&Vector3::new(0.1, 0.2, 2.0)), Vector3::new(0.1, 0.2, 0.5), epsilon = 1e-12);
        assert_relative_eq!(m.closest_point(&Vector3::new(2.0, 2.0, 2.0)), Vector3::new(0.5, 0.5, 0.5), epsilon = 1e-12);
        assert_relative_eq!(m.closest_point(&Vector3::new(0.1, 0.0, 0.45)), Vector3::new(0.1, 0.0, 0.5), epsilon = 1e-12);
        // brute-force oracle: densely sampled surface never beats the exact answer
        let dense = sample_mesh_surface(&m, 20_000, 5).unwrap();
        let q = Vector3::new(0.9, -0.3, 0.7);
        let exact = (m.closest_point(&q) - q).norm();
        let sampled = dense.points().iter().map(|s| (s - q).norm()).fold(f64::INFINITY, f64::min);
        assert!(exact <= sampled + 1e-12 && sampled - exact < 0.02);
    }

    fn unit_square(z: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
        (
            vec![
                Vector3::new(-0.5, -0.5, z),
                Vector3::new(0.5, -0.5, z),
                Vector3::new(0.5, 0.5, z),
                Vector3::new(-0.5, 0.5, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    #[test]
    fn ray_hits_square_at_unit_distance() {
        let (v, f) = unit_square(0.0);
        let mesh = TriangleMesh::new(v, f).unwrap();
        let ray = Ray::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, -1.0)).unwrap();
        let (p, d) = ray_mesh_intersect(&ray, &mesh, &Pose::identity()).unwrap();
        assert_relative_eq!(p, Vector3::zeros(), epsilon = 1e-12);
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
        let away = Ray::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert!(ray_mesh_intersect(&away, &mesh, &Pose::identity()).is_none());
    }

    #[test]
    fn stacked_squares_return_nearer_hit() {
        let (mut v, mut f) = unit_square(0.0);
        let (v2, f2) = unit_square(0.5);
        f.extend(f2.iter().map(|t| [t[0] + 4, t[1] + 4, t[2] + 4]));
        v.extend(v2);
        let mesh = TriangleMesh::new(v, f).unwrap();
        let ray = Ray::new(Vector3::new(0.1, 0.1, 2.0), -Vector3::z()).unwrap();
        let (_, d) = ray_mesh_intersect(&ray, &mesh, &Pose::identity()).unwrap();
        assert_relative_eq!(d, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn posed_mesh_hit_lies_on_face_plane() {
        let mesh = TriangleMesh::cuboid(Vector3::new(0.1, 0.2, 0.3)).unwrap();
        let pose = Pose::new(Quat::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.7), Vector3::new(0.2, 0.0, 0.1)).unwrap();
        let ray = Ray::new(Vector3::new(0.2, 0.0, 1.0), -Vector3::z()).unwrap();
        let (p, d) = ray_mesh_intersect(&ray, &mesh, &pose).unwrap();
        assert_relative_eq!(ray.at(d), p, epsilon = 1e-12);
        let local = pose.inverse().transform_point(&p);
        let h = Vector3::new(0.05, 0.1, 0.15);
        let on_face = (0..3).any(|k| (local[k].abs() - h[k]).abs() < 1e-7);
        assert!(on_face, "{local:?}");
    }

    #[test]
    fn degenerate_faces_dropped_and_bad_indices_rejected() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::new(2.0, 0.0, 0.0)];
        let m = TriangleMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.faces().len(), 1);
        assert!(matches!(
            TriangleMesh::new(v.clone(), vec![[0, 1, 7]]),
            Err(GeometryError::FaceIndexOutOfRange { face: 0, index: 7 })
        ));
        assert!(matches!(TriangleMesh::new(v, vec![[0, 1, 3]]), Err(GeometryError::EmptyMesh)));
    }

    #[test]
    fn obj_fan_triangulation() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\n";
        let m = TriangleMesh::parse_obj(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert_relative_eq!(m.surface_area(), 1.0, epsilon = 1e-12);
        assert!(TriangleMesh::parse_obj("v 0 0 0\nf 0 1 2\n").is_err());
        let back = TriangleMesh::parse_obj(&m.to_obj()).unwrap();
        assert_eq!(back.faces(), m.faces());
    }

    #[test]
    fn cuboid_and_cylinder_are_closed_with_expected_area() {
        let b = TriangleMesh::cuboid(Vector3::new(1.0, 2.0, 3.0)).unwrap();
        assert_relative_eq!(b.surface_area(), 22.0, epsilon = 1e-12);
        let c = TriangleMesh::cylinder(0.5, 1.0, 256).unwrap();
        let exact = std::f64::consts::TAU * 0.5 * 1.0 + 2.0 * std::f64::consts::PI * 0.25;
        assert_relative_eq!(c.surface_area(), exact, max_relative = 1e-3);
        // every outward ray from the centre hits exactly one face
        for d in [Vector3::x(), Vector3::y(), Vector3::z(), -Vector3::z(), Vector3::new(1.0, -1.0, 0.3)] {
            let r = Ray::new(Vector3::zeros(), d).unwrap();
            assert!(b.intersect_local(&r).is_some());
            assert!(c.intersect_local(&r).is_some());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_on_surface() {
        let (v, f) = unit_square(0.0);
        let single = TriangleMesh::new(v[..3].to_vec(), vec![f[0]]).unwrap();
        let p = sample_mesh_surface(&single, 1, 3).unwrap().points()[0];
        assert!(p.z == 0.0 && p.x >= -0.5 && p.y <= p.x + 1e-12 && p.y >= -0.5);
        let mesh = TriangleMesh::cuboid(Vector3::new(0.1, 0.1, 0.2)).unwrap();
        assert_eq!(sample_mesh_surface(&mesh, 100, 9).unwrap(), sample_mesh_surface(&mesh, 100, 9).unwrap());
        assert!(sample_mesh_surface(&mesh, 0, 9).is_err());
    }

    #[test]
    fn face_choice_follows_area_ratio() {
        // two triangles, area ratio 3:1
        let v = vec![
            Vector3::zeros(),
            Vector3::new(3.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 5.0),
            Vector3::new(1.0, 0.0, 5.0),
            Vector3::new(0.0, 1.0, 5.0),
        ];
        let mesh = TriangleMesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let cloud = sample_mesh_surface(&mesh, 10_000, 42).unwrap();
        let big = cloud.points().iter().filter(|p| p.z < 1.0).count() as f64;
        // binomial(10^4, 0.75): sigma = sqrt(1875)
        let sigma = (10_000.0_f64 * 0.75 * 0.25).sqrt();
        assert!((big - 7500.0).abs() <= 3.0 * sigma, "{big}");
    }
}
