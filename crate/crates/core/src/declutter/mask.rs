//! Label images: I/O, connected components and boundary tracing.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::planar::Point2;
use super::DeclutterError;

/// Per-pixel object ids, row-major, `0` = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

/// Run-length JSON form: `runs` are `[id, count]` in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub runs: Vec<(u32, usize)>,
}

impl SegMask {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, DeclutterError> {
        if labels.len() != width * height {
            return Err(DeclutterError::InvalidMask(format!(
                "{} labels for a {width}x{height} image",
                labels.len()
            )));
        }
        Ok(Self { width, height, labels })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, labels: vec![0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, id: u32) {
        self.labels[y * self.width + x] = id;
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    /// Object ids present, ascending.
    pub fn ids(&self) -> Vec<u32> {
        self.labels.iter().copied().filter(|&l| l != 0).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn pixel_counts(&self) -> HashMap<u32, usize> {
        let mut m = HashMap::new();
        for &l in self.labels.iter().filter(|&&l| l != 0) {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    /// Largest 4-connected component of `id` as `(x, y)` pixels; ties go to
    /// the component met first in row-major order.
    pub fn largest_component(&self, id: u32) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.labels.len()];
        let mut best: Vec<(usize, usize)> = Vec::new();
        for start in 0..self.labels.len() {
            if seen[start] || self.labels[start] != id {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % self.width, i / self.width);
                comp.push((x, y));
                let mut visit = |j: usize| {
                    if !seen[j] && self.labels[j] == id {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < self.width {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - self.width);
                }
                if y + 1 < self.height {
                    visit(i + self.width);
                }
            }
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best
    }

    pub fn to_rle(&self) -> RleMask {
        let mut runs: Vec<(u32, usize)> = Vec::new();
        for &l in &self.labels {
            match runs.last_mut() {
                Some((id, n)) if *id == l => *n += 1,
                _ => runs.push((l, 1)),
            }
        }
        RleMask { width: self.width, height: self.height, runs }
    }

    pub fn from_rle(rle: &RleMask) -> Result<Self, DeclutterError> {
        let mut labels = Vec::with_capacity(rle.width * rle.height);
        for &(id, n) in &rle.runs {
            labels.extend(std::iter::repeat_n(id, n));
        }
        Self::new(rle.width, rle.height, labels)
    }

    pub fn to_rle_json(&self) -> String {
        serde_json::to_string(&self.to_rle()).expect("mask serialises")
    }

    pub fn from_rle_json(text: &str) -> Result<Self, DeclutterError> {
        let rle: RleMask = serde_json::from_str(text).map_err(|e| DeclutterError::InvalidMask(e.to_string()))?;
        Self::from_rle(&rle)
    }

    /// Plain (ASCII, `P2`) PGM with the labels as grey levels.
    pub fn to_pgm(&self) -> String {
        let maxval = self.labels.iter().copied().max().unwrap_or(0).max(1);
        let mut s = format!("P2\n{} {}\n{}\n", self.width, self.height, maxval);
        for row in self.labels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(|l| l.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses `P2` (ASCII) or `P5` (binary, 8- or 16-bit) PGM.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, DeclutterError> {
        let bad = |m: &str| DeclutterError::InvalidMask(format!("PGM: {m}"));
        let mut pos = 0;
        let mut header = Vec::new();
        while header.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            header.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?.to_string());
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
        let (w, h, maxval) = (num(&header[1])?, num(&header[2])?, num(&header[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maxval out of range"));
        }
        let labels: Vec<u32> = match header[0].as_str() {
            "P2" => {
                let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| bad("non-ASCII body"))?;
                text.split_whitespace()
                    .map(|t| t.parse::<u32>().map_err(|_| bad("bad pixel value")))
                    .collect::<Result<_, _>>()?
            }
            "P5" => {
                let body = &bytes[(pos + 1).min(bytes.len())..];
                if maxval < 256 {
                    body.iter().map(|&b| b as u32).collect()
                } else {
                    body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32).collect()
                }
            }
            m => return Err(bad(&format!("unsupported magic {m}"))),
        };
        if labels.iter().any(|&l| l as usize > maxval) {
            return Err(bad("pixel exceeds maxval"));
        }
        Self::new(w, h, labels)
    }

    /// Loads `.json` as run-length JSON, anything else as PGM.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DeclutterError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_rle_json(&String::from_utf8_lossy(&bytes))
        } else {
            Self::from_pgm(&bytes)
        }
    }
}

/// Outer boundary of a 4-connected pixel set as a closed polygon through
/// pixel corners, interior on the left, collinear vertices removed. Pixel
/// `(x, y)` covers `[x, x+1] × [y, y+1]`.
pub fn trace_outer_boundary(pixels: &[(usize, usize)]) -> Vec<Point2> {
    if pixels.is_empty() {
        return Vec::new();
    }
    let set: BTreeSet<(i64, i64)> = pixels.iter().map(|&(x, y)| (x as i64, y as i64)).collect();
    let inside = |x: i64, y: i64| set.contains(&(x, y));
    // directed edges keyed by their start corner
    let mut out: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
    for &(x, y) in &set {
        if !inside(x, y - 1) {
            out.entry((x, y)).or_default().push((x + 1, y));
        }
        if !inside(x + 1, y) {
            out.entry((x + 1, y)).or_default().push((x + 1, y + 1));
        }
        if !inside(x, y + 1) {
            out.entry((x + 1, y + 1)).or_default().push((x, y + 1));
        }
        if !inside(x - 1, y) {
            out.entry((x, y + 1)).or_default().push((x, y));
        }
    }
    // lowest row, then leftmost: its bottom edge is on the outer boundary
    let &(sx, sy) = set.iter().min_by_key(|&&(x, y)| (y, x)).unwrap();
    let start = (sx, sy);
    let mut poly = vec![start];
    let mut prev = start;
    let mut cur = (sx + 1, sy);
    let limit = 4 * set.len() + 4;
    while cur != start && poly.len() <= limit {
        poly.push(cur);
        let din = (cur.0 - prev.0, cur.1 - prev.1);
        let options = &out[&cur];
        let next = if options.len() == 1 {
            options[0]
        } else {
            // pinch corner: hug the current pixel by turning left
            *options
                .iter()
                .max_by_key(|&&n| {
                    let d = (n.0 - cur.0, n.1 - cur.1);
                    din.0 * d.1 - din.1 * d.0
                })
                .unwrap()
        };
        prev = cur;
        cur = next;
    }
    let pts: Vec<Point2> = poly.iter().map(|&(x, y)| Point2::new(x as f64, y as f64)).collect();
    simplify_collinear(&pts)
}

fn simplify_collinear(pts: &[Point2]) -> Vec<Point2> {
    let n = pts.len();
    if n < 4 {
        return pts.to_vec();
    }
    (0..n)
        .filter(|&i| {
            let a = pts[(i + n - 1) % n];
            let b = pts[i];
            let c = pts[(i + 1) % n];
            (b - a).perp(&(c - b)).abs() > 1e-12
        })
        .map(|i| pts[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::declutter::planar::signed_area;

    fn mask_from(rows: &[&str]) -> SegMask {
        let h = rows.len();
        let w = rows[0].len();
        let labels = rows.iter().flat_map(|r| r.bytes().map(|b| (b - b'0') as u32)).collect();
        SegMask::new(w, h, labels).unwrap()
    }

    #[test]
    fn square_boundary() {
        let pixels: Vec<_> = (0..10).flat_map(|y| (0..10).map(move |x| (x + 2, y + 3))).collect();
        let poly = trace_outer_boundary(&pixels);
        assert_eq!(poly.len(), 4);
        assert!((signed_area(&poly) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn l_shape_boundary_area() {
        let m = mask_from(&["1100", "1100", "1111"]);
        let comp = m.largest_component(1);
        assert_eq!(comp.len(), 8);
        let poly = trace_outer_boundary(&comp);
        assert_eq!(poly.len(), 6);
        assert!((signed_area(&poly) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn pinched_ring_boundary_covers_all_pixels() {
        // diagonal pinch at the top-right of the hole
        let m = mask_from(&["11100", "10110", "11110"]);
        let comp = m.largest_component(1);
        let poly = trace_outer_boundary(&comp);
        let hull_area = signed_area(&poly);
        assert!(hull_area >= comp.len() as f64 - 1e-9, "{hull_area}");
    }

    #[test]
    fn largest_component_is_kept() {
        let m = mask_from(&["1100000", "1100011", "0000011", "0000011"]);
        assert_eq!(m.largest_component(1).len(), 6);
    }

    #[test]
    fn pgm_round_trip() {
        let m = mask_from(&["0120", "0330", "0000"]);
        assert_eq!(SegMask::from_pgm(m.to_pgm().as_bytes()).unwrap(), m);
        let mut p5 = b"P5\n# labels\n4 3\n255\n".to_vec();
        p5.extend(m.labels().iter().map(|&l| l as u8));
        assert_eq!(SegMask::from_pgm(&p5).unwrap(), m);
        assert!(SegMask::from_pgm(b"P3\n1 1\n1\n0").is_err());
        assert!(SegMask::from_pgm(b"P2\n2 2\n1\n0 0 0").is_err());
    }

    #[test]
    fn rle_round_trip() {
        let m = mask_from(&["0120", "0330", "0000"]);
        let json = m.to_rle_json();
        assert_eq!(SegMask::from_rle_json(&json).unwrap(), m);
        assert_eq!(m.to_rle().runs[0], (0, 1));
        assert!(SegMask::from_rle_json(r#"{"width":2,"height":2,"runs":[[0,3]]}"#).is_err());
        assert_eq!(m.ids(), vec![1, 2, 3]);
    }
}
