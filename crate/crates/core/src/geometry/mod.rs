//! Exact-geometry primitives shared by every stage of the pipeline:
//! quaternion algebra, rigid poses, rays, triangle meshes with a BVH,
//! a k-d tree for nearest-neighbour queries and surface sampling.

mod bvh;
mod cloud;
mod kdtree;
mod mesh;
mod pose;
mod quat;
mod ray;

pub use cloud::PointCloud;
pub use kdtree::{nearest_neighbor, KdTree};
pub use mesh::{ray_mesh_intersect, sample_mesh_surface, RayHit, TriangleMesh, HIT_EPSILON};
pub use pose::Pose;
pub use quat::{quat_mul, quat_to_rotmat, skew, Quat, UNIT_TOLERANCE};
pub use ray::{Aabb, Ray};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("quaternion is not unit (norm {0})")]
    NonUnitQuaternion(f64),
    #[error("quaternion has zero or non-finite norm")]
    ZeroQuaternion,
    #[error("ray direction must be finite and non-zero")]
    InvalidRay,
    #[error("point {0} has a non-finite coordinate")]
    NonFinitePoint(usize),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("mesh has no non-degenerate faces")]
    EmptyMesh,
    #[error("face {face} references vertex {index} which does not exist")]
    FaceIndexOutOfRange { face: usize, index: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
