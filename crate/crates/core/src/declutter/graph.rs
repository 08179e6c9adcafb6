//! Detections, the declutter tree and next-object selection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::mask::{trace_outer_boundary, SegMask};
use super::planar::{iou, min_area_rect, min_contour_distance, Point2, RotatedRect};
use super::{DeclutterError, DeclutterParams};

/// Weight given to vertices with no non-zero path to the target.
pub const UNREACHABLE_WEIGHT: f64 = 1e-6;

/// Grasp proposal from the quality provider, in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspPose {
    pub pixel: Point2,
    /// Gripper rotation about the camera axis (radians).
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: u32,
    /// Closed outer boundary through pixel corners.
    pub contour: Vec<Point2>,
    pub rect: RotatedRect,
    /// Mean of the pixel centres (px).
    pub centroid: Point2,
    pub area_px: usize,
    pub grasp_quality: f64,
    pub grasp_pose: Option<GraspPose>,
}

/// One detection per object id: boundary of the largest 4-connected
/// component, its minimum-area box and pixel centroid. Grasp fields start
/// empty.
pub fn extract_detections(mask: &SegMask) -> Result<Vec<Detection>, DeclutterError> {
    if mask.is_empty() {
        return Err(DeclutterError::EmptyMask);
    }
    let mut out = Vec::new();
    for id in mask.ids() {
        let comp = mask.largest_component(id);
        if comp.is_empty() {
            log::warn!("object {id} has no pixels, skipped");
            continue;
        }
        let n = comp.len() as f64;
        let centroid = comp.iter().fold(Point2::zeros(), |acc, &(x, y)| acc + Point2::new(x as f64 + 0.5, y as f64 + 0.5)) / n;
        let contour = trace_outer_boundary(&comp);
        let rect = min_area_rect(&contour);
        out.push(Detection { id, contour, rect, centroid, area_px: comp.len(), grasp_quality: 0.0, grasp_pose: None });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Grasp,
    Push,
}

/// Which rule produced a pairwise weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightBranch {
    Overlap,
    Proximity,
    None,
}

/// Pairwise relation weight: IoU when the boxes overlap by more than
/// `mu_o`, otherwise the inverse normalised contour distance when it is
/// below `mu_d`, otherwise zero. Distances are normalised by the image
/// diagonal and floored at one pixel.
pub fn relation_weight(a: &Detection, b: &Detection, params: &DeclutterParams, diag_px: f64) -> (f64, WeightBranch) {
    let overlap = iou(&a.rect, &b.rect);
    if overlap > params.mu_o {
        return (overlap, WeightBranch::Overlap);
    }
    let d = min_contour_distance(&a.contour, &b.contour).max(1.0) / diag_px;
    if d < params.mu_d {
        (1.0 / d, WeightBranch::Proximity)
    } else {
        (0.0, WeightBranch::None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: u32,
    pub child: u32,
    pub weight: f64,
    pub action: ActionKind,
}

/// Tree rooted at the target; every other vertex has one incoming edge
/// from the vertex nearer the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclutterGraph {
    root: u32,
    vertices: BTreeMap<u32, Detection>,
    edges: BTreeMap<u32, Edge>,
}

/// Next step of decluttering.
#[derive(Debug, Clone, PartialEq)]
pub enum NextObject {
    Remove { id: u32, action: ActionKind, weight: f64 },
    Complete,
}

impl DeclutterGraph {
    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: u32) -> Option<&Detection> {
        self.vertices.get(&id)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Detection> {
        self.vertices.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    /// Incoming edge of `id`.
    pub fn edge_to(&self, id: u32) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn children(&self, id: u32) -> Vec<u32> {
        self.edges.values().filter(|e| e.parent == id).map(|e| e.child).collect()
    }

    /// Non-root vertices without children, ascending.
    pub fn leaves(&self) -> Vec<u32> {
        let parents: BTreeSet<u32> = self.edges.values().map(|e| e.parent).collect();
        self.vertices.keys().copied().filter(|&v| v != self.root && !parents.contains(&v)).collect()
    }

    /// Checks the tree invariant: one incoming edge per non-root vertex, none
    /// for the root, and every vertex reaches the root.
    pub fn is_tree(&self) -> bool {
        if !self.vertices.contains_key(&self.root) || self.edges.contains_key(&self.root) {
            return false;
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return false;
        }
        self.vertices.keys().all(|&v| {
            let mut cur = v;
            for _ in 0..=self.vertices.len() {
                if cur == self.root {
                    return true;
                }
                match self.edges.get(&cur) {
                    Some(e) if self.vertices.contains_key(&e.parent) => cur = e.parent,
                    _ => return false,
                }
            }
            false
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph declutter {\n");
        for v in self.vertices.values() {
            let label = if v.id == self.root { format!("{} (target)", v.id) } else { v.id.to_string() };
            let _ = writeln!(s, "  \"{}\" [label=\"{label}\" q=\"{:.3}\"];", v.id, v.grasp_quality);
        }
        for e in self.edges.values() {
            let action = match e.action {
                ActionKind::Grasp => "grasp",
                ActionKind::Push => "push",
            };
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [label=\"{action} {:.6}\"];", e.parent, e.child, e.weight);
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth-first tree from the target. Each level attaches every unexplored
/// vertex with a non-zero relation to the explored set via its heaviest such
/// edge (ties to the lower parent id); vertices never reached hang from the
/// root with [`UNREACHABLE_WEIGHT`]. Edge actions default to push.
pub fn build_graph(
    detections: &[Detection],
    target_id: u32,
    params: &DeclutterParams,
    diag_px: f64,
) -> Result<DeclutterGraph, DeclutterError> {
    if detections.is_empty() {
        return Err(DeclutterError::NoDetections);
    }
    let vertices: BTreeMap<u32, Detection> = detections.iter().map(|d| (d.id, d.clone())).collect();
    if !vertices.contains_key(&target_id) {
        return Err(DeclutterError::TargetMissing(target_id));
    }
    let ids: Vec<u32> = vertices.keys().copied().collect();
    let mut weights: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let (w, _) = relation_weight(&vertices[&a], &vertices[&b], params, diag_px);
            weights.insert((a, b), w);
            weights.insert((b, a), w);
        }
    }
    let mut explored: BTreeSet<u32> = BTreeSet::from([target_id]);
    let mut edges: BTreeMap<u32, Edge> = BTreeMap::new();
    loop {
        let mut level = Vec::new();
        for &v in ids.iter().filter(|v| !explored.contains(v)) {
            let mut best: Option<(u32, f64)> = None;
            for &p in &explored {
                let w = weights[&(v, p)];
                if w > 0.0 && best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((p, w));
                }
            }
            if let Some((p, w)) = best {
                level.push(Edge { parent: p, child: v, weight: w, action: ActionKind::Push });
            }
        }
        if level.is_empty() {
            break;
        }
        for e in level {
            explored.insert(e.child);
            edges.insert(e.child, e);
        }
    }
    for &v in ids.iter().filter(|v| !explored.contains(v)) {
        edges.insert(v, Edge { parent: target_id, child: v, weight: UNREACHABLE_WEIGHT, action: ActionKind::Push });
    }
    Ok(DeclutterGraph { root: target_id, vertices, edges })
}

/// Labels each incoming edge grasp when the child's quality is at least
/// `mu_q`, push otherwise.
pub fn attribute_actions(graph: &mut DeclutterGraph, mu_q: f64) {
    for e in graph.edges.values_mut() {
        let q = graph.vertices[&e.child].grasp_quality;
        e.action = if q >= mu_q { ActionKind::Grasp } else { ActionKind::Push };
    }
}

/// Leaf with the heaviest incoming edge (ties to the lower id).
pub fn next_object(graph: &DeclutterGraph) -> NextObject {
    let mut best: Option<&Edge> = None;
    for leaf in graph.leaves() {
        let e = &graph.edges[&leaf];
        if best.is_none_or(|b| e.weight > b.weight) {
            best = Some(e);
        }
    }
    match best {
        Some(e) => NextObject::Remove { id: e.child, action: e.action, weight: e.weight },
        None => NextObject::Complete,
    }
}

/// Removes leaf `id` and its incoming edge.
pub fn remove_and_update(graph: &mut DeclutterGraph, id: u32) -> Result<(), DeclutterError> {
    if id == graph.root {
        return Err(DeclutterError::RootRemoval);
    }
    if !graph.vertices.contains_key(&id) {
        return Err(DeclutterError::UnknownVertex(id));
    }
    if !graph.children(id).is_empty() {
        return Err(DeclutterError::NotALeaf(id));
    }
    graph.vertices.remove(&id);
    graph.edges.remove(&id);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(id: u32, x: f64, y: f64, s: f64, q: f64) -> Detection {
        let contour = vec![Point2::new(x, y), Point2::new(x + s, y), Point2::new(x + s, y + s), Point2::new(x, y + s)];
        let rect = min_area_rect(&contour);
        Detection {
            id,
            contour,
            rect,
            centroid: Point2::new(x + s / 2.0, y + s / 2.0),
            area_px: (s * s) as usize,
            grasp_quality: q,
            grasp_pose: None,
        }
    }

    #[test]
    fn square_detection() {
        let mut m = SegMask::blank(20, 20);
        for y in 5..15 {
            for x in 3..13 {
                m.set(x, y, 4);
            }
        }
        let d = extract_detections(&m).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].rect.area() - 100.0).abs() < 1e-9);
        assert!((d[0].centroid - Point2::new(8.0, 10.0)).norm() < 1e-12);
        assert!(extract_detections(&SegMask::blank(0, 0)).is_err());
    }

    #[test]
    fn weight_branches() {
        let p = DeclutterParams::default();
        let diag = 100.0;
        // IoU 1/9 between overlapping 10-px squares offset by (5, 5)... use exact rects
        let a = det(1, 0.0, 0.0, 10.0, 0.0);
        let b = det(2, 5.0, 5.0, 10.0, 0.0);
        let (w, br) = relation_weight(&a, &b, &p, diag);
        assert_eq!(br, WeightBranch::Overlap);
        assert!((w - 25.0 / 175.0).abs() < 1e-12);
        // 20 px apart on a 100 px diagonal: d = 0.2 → weight 5
        let c = det(3, 30.0, 0.0, 10.0, 0.0);
        let (w, br) = relation_weight(&a, &c, &p, diag);
        assert_eq!(br, WeightBranch::Proximity);
        assert!((w - 5.0).abs() < 1e-12);
        // 80 px apart → no edge
        let far = det(4, 90.0, 0.0, 10.0, 0.0);
        assert_eq!(relation_weight(&a, &far, &p, diag), (0.0, WeightBranch::None));
    }

    #[test]
    fn bfs_tree_and_draining() {
        let p = DeclutterParams { mu_d: 0.3, ..DeclutterParams::default() };
        let dets = vec![
            det(1, 0.0, 0.0, 10.0, 0.3),
            det(2, 15.0, 0.0, 10.0, 0.05),
            det(3, 30.0, 0.0, 10.0, 0.1),
            det(4, 200.0, 200.0, 10.0, 0.5),
        ];
        let mut g = build_graph(&dets, 1, &p, 100.0).unwrap();
        assert!(g.is_tree());
        assert_eq!(g.edge_to(2).unwrap().parent, 1);
        // 3 is 20 px from 1 (weight 5) and 5 px from 2, but 2 is explored one level later
        assert_eq!(g.edge_to(3).unwrap().parent, 1);
        assert_eq!(g.edge_to(4).unwrap().weight, UNREACHABLE_WEIGHT);
        attribute_actions(&mut g, 0.1);
        assert_eq!(g.edge_to(2).unwrap().action, ActionKind::Push);
        assert_eq!(g.edge_to(3).unwrap().action, ActionKind::Grasp);
        assert_eq!(g.edge_to(4).unwrap().action, ActionKind::Grasp);
        let mut removals = 0;
        while let NextObject::Remove { id, .. } = next_object(&g) {
            remove_and_update(&mut g, id).unwrap();
            assert!(g.is_tree());
            removals += 1;
        }
        assert_eq!(removals, 3);
        assert_eq!(g.len(), 1);
        assert!(matches!(remove_and_update(&mut g, 1), Err(DeclutterError::RootRemoval)));
    }

    #[test]
    fn next_object_prefers_heavier_leaf() {
        let p = DeclutterParams::default();
        let dets = vec![det(1, 0.0, 0.0, 10.0, 0.0), det(2, 30.0, 0.0, 10.0, 0.0), det(3, 5.0, 5.0, 10.0, 0.0)];
        let g = build_graph(&dets, 1, &p, 100.0).unwrap();
        // leaf 2 at weight 5 beats leaf 3 at IoU weight ≈ 0.14
        assert!(matches!(next_object(&g), NextObject::Remove { id: 2, .. }));
        let dot = g.to_dot();
        assert!(dot.starts_with("digraph") && dot.contains("\"1\" -> \"2\""));
    }

    #[test]
    fn non_leaf_removal_rejected() {
        let p = DeclutterParams { mu_d: 0.3, ..DeclutterParams::default() };
        // chain 1 - 2 - 3 where 3 only relates to 2
        let dets = vec![det(1, 0.0, 0.0, 10.0, 0.0), det(2, 25.0, 0.0, 10.0, 0.0), det(3, 50.0, 0.0, 10.0, 0.0)];
        let mut g = build_graph(&dets, 1, &p, 100.0).unwrap();
        assert_eq!(g.edge_to(3).unwrap().parent, 2);
        assert!(matches!(remove_and_update(&mut g, 2), Err(DeclutterError::NotALeaf(2))));
        assert!(build_graph(&dets, 9, &p, 100.0).is_err());
        assert!(build_graph(&[], 1, &p, 100.0).is_err());
    }
}
