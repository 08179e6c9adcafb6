//! Median-split bounding-volume hierarchy over mesh faces.

use nalgebra::Vector3;

use super::mesh::{ray_triangle, RayHit};
use super::{Aabb, Ray};

const LEAF_FACES: usize = 4;
// Pads node boxes so flat (axis-aligned) faces keep a non-empty slab.
const BOX_PAD: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    // leaf faces are order[start..end]
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub(crate) fn build(vertices: &[Vector3<f64>], faces: &[[usize; 3]]) -> Self {
        let centroids: Vec<Vector3<f64>> = faces
            .iter()
            .map(|f| (vertices[f[0]] + vertices[f[1]] + vertices[f[2]]) / 3.0)
            .collect();
        let face_bounds: Vec<Aabb> = faces
            .iter()
            .map(|f| Aabb::from_points(f.iter().map(|&i| &vertices[i])).unwrap().expanded(BOX_PAD))
            .collect();
        let mut bvh = Bvh { nodes: Vec::new(), order: (0..faces.len()).collect() };
        if !faces.is_empty() {
            bvh.build_node(&centroids, &face_bounds, 0, faces.len());
        }
        bvh
    }

    fn build_node(&mut self, centroids: &[Vector3<f64>], boxes: &[Aabb], start: usize, end: usize) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .map(|&f| boxes[f])
            .reduce(|a, b| a.union(&b))
            .expect("non-empty range");
        let idx = self.nodes.len();
        self.nodes.push(Node { bounds, start, end, children: None });
        if end - start > LEAF_FACES {
            let cb = Aabb::from_points(self.order[start..end].iter().map(|&f| &centroids[f])).unwrap();
            let axis = cb.extent().imax();
            let mid = (end - start) / 2;
            self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
            });
            let l = self.build_node(centroids, boxes, start, start + mid);
            let r = self.build_node(centroids, boxes, start + mid, end);
            self.nodes[idx].children = Some((l, r));
        }
        idx
    }

    pub(crate) fn intersect(&self, vertices: &[Vector3<f64>], faces: &[[usize; 3]], ray: &Ray) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<RayHit> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let Some((t0, _)) = node.bounds.ray_interval(ray) else { continue };
            if best.is_some_and(|b| t0 > b.distance) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for &fi in &self.order[node.start..node.end] {
                        let f = faces[fi];
                        if let Some(t) = ray_triangle(ray, &vertices[f[0]], &vertices[f[1]], &vertices[f[2]]) {
                            // prefer lower face index on exact ties, as the linear scan does
                            if best.is_none_or(|b| t < b.distance || (t == b.distance && fi < b.face)) {
                                best = Some(RayHit { point: ray.at(t), distance: t, face: fi });
                            }
                        }
                    }
                }
            }
        }
        best
    }
}
