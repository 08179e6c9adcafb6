//! Planar polygon geometry in pixel coordinates.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub type Point2 = Vector2<f64>;

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Signed shoelace area (positive for counter-clockwise in a y-up frame).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].perp(&poly[(i + 1) % n])).sum::<f64>() / 2.0
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    signed_area(poly).abs()
}

/// Andrew's monotone chain; counter-clockwise, no collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Oriented rectangle: `size = (w, h)` along the axes at `angle` and
/// `angle + 90°`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: Point2,
    pub size: Point2,
    /// Radians.
    pub angle: f64,
}

impl RotatedRect {
    pub fn axis_aligned(min: Point2, max: Point2) -> Self {
        Self { center: (min + max) / 2.0, size: max - min, angle: 0.0 }
    }

    pub fn area(&self) -> f64 {
        self.size.x * self.size.y
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let u = Point2::new(self.angle.cos(), self.angle.sin()) * (self.size.x / 2.0);
        let v = Point2::new(-self.angle.sin(), self.angle.cos()) * (self.size.y / 2.0);
        let c = self.center;
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        let d = p - self.center;
        let (s, c) = self.angle.sin_cos();
        let lx = d.x * c + d.y * s;
        let ly = -d.x * s + d.y * c;
        lx.abs() <= self.size.x / 2.0 + tol && ly.abs() <= self.size.y / 2.0 + tol
    }
}

/// Minimum-area enclosing rectangle by rotating calipers over hull edges.
pub fn min_area_rect(points: &[Point2]) -> RotatedRect {
    let hull = convex_hull(points);
    match hull.len() {
        0 => return RotatedRect { center: Point2::zeros(), size: Point2::zeros(), angle: 0.0 },
        1 => return RotatedRect { center: hull[0], size: Point2::zeros(), angle: 0.0 },
        _ => {}
    }
    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()] - hull[i];
        if e.norm() == 0.0 {
            continue;
        }
        let u = e.normalize();
        let v = Point2::new(-u.y, u.x);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &hull {
            let (a, b) = (p.dot(&u), p.dot(&v));
            umin = umin.min(a);
            umax = umax.max(a);
            vmin = vmin.min(b);
            vmax = vmax.max(b);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a, _)| area < *a - 1e-12) {
            let center = u * (umin + umax) / 2.0 + v * (vmin + vmax) / 2.0;
            let rect = RotatedRect { center, size: Point2::new(umax - umin, vmax - vmin), angle: u.y.atan2(u.x) };
            best = Some((area, rect));
        }
    }
    best.map(|(_, r)| r).unwrap_or(RotatedRect { center: hull[0], size: Point2::zeros(), angle: 0.0 })
}

/// Sutherland–Hodgman clip of `subject` by the convex counter-clockwise `clip`.
pub fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let p = input[j];
            let q = input[(j + 1) % input.len()];
            let (dp, dq) = (cross(&a, &b, &p), cross(&a, &b, &q));
            if dp >= 0.0 {
                out.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                out.push(p + (q - p) * (dp / (dp - dq)));
            }
        }
    }
    out
}

/// Intersection over union of two rotated rectangles.
pub fn iou(a: &RotatedRect, b: &RotatedRect) -> f64 {
    let (aa, ab) = (a.area(), b.area());
    if aa <= 0.0 || ab <= 0.0 {
        return 0.0;
    }
    let inter = polygon_area(&clip_convex(&a.corners(), &b.corners()));
    let union = aa + ab - inter;
    if union <= 0.0 { 0.0 } else { (inter / union).clamp(0.0, 1.0) }
}

fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let t = if l2 == 0.0 { 0.0 } else { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) };
    (a + ab * t - p).norm()
}

fn segments_intersect(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn segment_distance(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Minimum distance between two closed polygonal contours (0 if they touch
/// or cross).
pub fn min_contour_distance(a: &[Point2], b: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let (p, q) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            best = best.min(segment_distance(&p, &q, &b[j], &b[(j + 1) % b.len()]));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}
