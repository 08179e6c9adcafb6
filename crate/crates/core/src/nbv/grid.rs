//! Dense log-odds occupancy grid with exact voxel traversal.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::NbvError;
use crate::geometry::{Aabb, Ray};

/// Hit probability of the inverse sensor model.
pub const P_HIT: f64 = 0.7;
/// Miss probability of the inverse sensor model.
pub const P_MISS: f64 = 0.4;
/// Log-odds are clamped to `±LOG_ODDS_CLAMP`.
pub const LOG_ODDS_CLAMP: f64 = 3.5;

pub fn log_odds(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn probability(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// Binary entropy in bits, with `0 · log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

fn clamp(l: f64) -> f64 {
    l.clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP)
}

/// Per-cell outcome of one measurement batch. A hit outranks a miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum CellUpdate {
    Miss = 1,
    Hit = 2,
}

impl CellUpdate {
    pub(crate) fn delta(self) -> f64 {
        match self {
            CellUpdate::Hit => log_odds(P_HIT),
            CellUpdate::Miss => log_odds(P_MISS),
        }
    }
}

/// Collects at most one update per cell, hit beating miss.
#[derive(Debug, Clone)]
pub(crate) struct UpdateBatch {
    marks: Vec<u8>,
    touched: Vec<usize>,
}

impl UpdateBatch {
    pub(crate) fn new(cells: usize) -> Self {
        Self { marks: vec![0; cells], touched: Vec::new() }
    }

    pub(crate) fn record(&mut self, cell: usize, update: CellUpdate) {
        let m = &mut self.marks[cell];
        if *m == 0 {
            self.touched.push(cell);
        }
        *m = (*m).max(update as u8);
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (usize, CellUpdate)> + '_ {
        self.touched.iter().map(|&c| {
            (c, if self.marks[c] == CellUpdate::Hit as u8 { CellUpdate::Hit } else { CellUpdate::Miss })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    origin: Vector3<f64>,
    resolution: f64,
    dims: [usize; 3],
    cells: Vec<f64>,
}

impl OccupancyGrid {
    /// Grid with its minimum corner at `origin`; all cells unknown (`l = 0`).
    pub fn new(origin: Vector3<f64>, resolution: f64, dims: [usize; 3]) -> Result<Self, NbvError> {
        if !(resolution > 0.0 && resolution.is_finite()) || dims.iter().any(|&d| d == 0) {
            return Err(NbvError::InvalidGrid(format!("resolution {resolution}, dims {dims:?}")));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(Self { origin, resolution, dims, cells: vec![0.0; n] })
    }

    /// Cubic grid of side `2 · half_extent` centred on `center`.
    pub fn around(center: Vector3<f64>, half_extent: f64, resolution: f64) -> Result<Self, NbvError> {
        let n = ((2.0 * half_extent / resolution).ceil() as usize).max(1);
        let side = n as f64 * resolution;
        Self::new(center.add_scalar(-side / 2.0), resolution, [n, n, n])
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vector3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.resolution;
        Aabb::new(self.origin, self.origin + ext)
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let y = (index / self.dims[0]) % self.dims[1];
        let z = index / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    /// Cell containing `p`, if inside the grid (max faces inclusive).
    pub fn cell_of(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let f = (p[k] - self.origin[k]) / self.resolution;
            if !(f >= 0.0 && f <= self.dims[k] as f64) {
                return None;
            }
            c[k] = (f.floor() as usize).min(self.dims[k] - 1);
        }
        Some(c)
    }

    pub fn cell_center(&self, c: [usize; 3]) -> Vector3<f64> {
        self.origin + Vector3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.resolution
    }

    pub fn cell_bounds(&self, c: [usize; 3]) -> Aabb {
        let lo = self.origin + Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.resolution;
        Aabb::new(lo, lo.add_scalar(self.resolution))
    }

    pub fn log_odds_at(&self, index: usize) -> f64 {
        self.cells[index]
    }

    pub fn probability_at(&self, index: usize) -> f64 {
        probability(self.cells[index])
    }

    /// Sets a cell's log-odds (clamped).
    pub fn set_log_odds(&mut self, index: usize, l: f64) {
        self.cells[index] = clamp(l);
    }

    pub fn log_odds_cells(&self) -> &[f64] {
        &self.cells
    }

    /// Shannon entropy of the whole grid in bits.
    pub fn entropy(&self) -> f64 {
        self.cells.iter().map(|&l| binary_entropy(probability(l))).sum()
    }

    /// Cells crossed by the segment `from → to`, in order, restricted to the
    /// grid (Amanatides–Woo stepping). The boolean is true when `to` lies
    /// inside the grid, in which case the last cell is the one containing it.
    pub fn traverse(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> (Vec<usize>, bool) {
        let mut out = Vec::new();
        let seg = to - from;
        let len = seg.norm();
        let end_cell = self.cell_of(to);
        if len == 0.0 {
            if let Some(c) = end_cell {
                out.push(self.index(c));
            }
            return (out, end_cell.is_some());
        }
        let ray = Ray::from_unit(*from, seg / len);
        let Some((t0, t1)) = self.bounds().ray_interval(&ray) else {
            return (out, false);
        };
        let t_end = t1.min(len);
        if t0 > t_end {
            return (out, false);
        }
        let start = ray.at(t0);
        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            let f = ((start[k] - self.origin[k]) / self.resolution).floor() as i64;
            cell[k] = f.clamp(0, self.dims[k] as i64 - 1);
            let d = ray.direction[k];
            if d > 0.0 {
                step[k] = 1;
                let boundary = self.origin[k] + (cell[k] + 1) as f64 * self.resolution;
                t_max[k] = (boundary - from[k]) / d;
                t_delta[k] = self.resolution / d;
            } else if d < 0.0 {
                step[k] = -1;
                let boundary = self.origin[k] + cell[k] as f64 * self.resolution;
                t_max[k] = (boundary - from[k]) / d;
                t_delta[k] = -self.resolution / d;
            }
        }
        loop {
            out.push(self.index([cell[0] as usize, cell[1] as usize, cell[2] as usize]));
            let k = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[k] >= t_end {
                break;
            }
            cell[k] += step[k];
            if cell[k] < 0 || cell[k] >= self.dims[k] as i64 {
                break;
            }
            t_max[k] += t_delta[k];
        }
        if let Some(c) = end_cell {
            let idx = self.index(c);
            if out.last() != Some(&idx) {
                out.push(idx);
            }
        }
        (out, end_cell.is_some())
    }

    pub(crate) fn apply(&mut self, batch: &UpdateBatch) {
        for (cell, update) in batch.iter() {
            self.cells[cell] = clamp(self.cells[cell] + update.delta());
        }
    }

    /// Integrates one batch of range returns taken from `sensor_origin`.
    ///
    /// Every cell between the origin and a return is a miss, the cell holding
    /// the return is a hit; each cell changes at most once per batch, a hit
    /// taking priority. Segments are clipped to the grid, so the sensor may
    /// sit outside it.
    pub fn integrate_measurement(&mut self, sensor_origin: &Vector3<f64>, hits: &[Vector3<f64>]) -> Result<(), NbvError> {
        if !sensor_origin.iter().all(|c| c.is_finite()) {
            return Err(NbvError::InvalidOrigin);
        }
        let mut batch = UpdateBatch::new(self.cells.len());
        for hit in hits {
            let (cells, inside) = self.traverse(sensor_origin, hit);
            let n = cells.len();
            for (i, &c) in cells.iter().enumerate() {
                let update = if inside && i + 1 == n { CellUpdate::Hit } else { CellUpdate::Miss };
                batch.record(c, update);
            }
        }
        self.apply(&batch);
        Ok(())
    }

    pub fn dump(&self) -> GridDump {
        GridDump {
            origin: [self.origin.x, self.origin.y, self.origin.z],
            resolution: self.resolution,
            dims: self.dims,
            probabilities: self.cells.iter().map(|&l| probability(l)).collect(),
        }
    }
}

/// JSON inspection format: cell `(x, y, z)` sits at index
/// `(z · ny + y) · nx + x` of `probabilities`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDump {
    pub origin: [f64; 3],
    pub resolution: f64,
    pub dims: [usize; 3],
    pub probabilities: Vec<f64>,
}
