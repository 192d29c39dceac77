//! Uniform lattice over the phase box `[-R, R]^h` for `h <= 3`.
//!
//! Geodesic searches run on this lattice with full box connectivity:
//! 2 neighbors per node for `h = 1`, 8 for `h = 2`, 26 for `h = 3`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PhaseLattice {
    h: usize,
    /// Points per axis.
    n: usize,
    radius: f64,
    /// Nonzero offsets in `{-1, 0, 1}^h`, paired with their Euclidean
    /// length in lattice units.
    offsets: Vec<([i64; 3], f64)>,
}

impl PhaseLattice {
    pub fn new(h: usize, points_per_axis: usize, radius: f64) -> Result<Self> {
        if h == 0 || h > 3 {
            return Err(Error::UnsupportedDimension { h });
        }
        if points_per_axis < 3 {
            return Err(Error::InvalidSystem(format!(
                "lattice needs at least 3 points per axis, got {points_per_axis}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidSystem(format!("box radius {radius} invalid")));
        }
        let mut offsets = Vec::new();
        let range = |active: bool| if active { -1..=1 } else { 0..=0 };
        for dx in range(true) {
            for dy in range(h >= 2) {
                for dz in range(h >= 3) {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let len = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                    offsets.push(([dx, dy, dz], len));
                }
            }
        }
        Ok(PhaseLattice {
            h,
            n: points_per_axis,
            radius,
            offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.h
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Axis spacing `2R / (n - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.n - 1) as f64
    }

    /// Total node count `n^h`.
    pub fn len(&self) -> usize {
        self.n.pow(self.h as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn offsets(&self) -> &[([i64; 3], f64)] {
        &self.offsets
    }

    /// Flat index from per-axis indices (unused axes must be 0).
    pub fn index(&self, ix: [usize; 3]) -> usize {
        match self.h {
            1 => ix[0],
            2 => ix[1] * self.n + ix[0],
            _ => (ix[2] * self.n + ix[1]) * self.n + ix[0],
        }
    }

    /// Per-axis indices from a flat index.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        match self.h {
            1 => [idx, 0, 0],
            2 => [idx % self.n, idx / self.n, 0],
            _ => {
                let ix = idx % self.n;
                let rest = idx / self.n;
                [ix, rest % self.n, rest / self.n]
            }
        }
    }

    /// Coordinates of a node, written into `out[..h]`.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let ix = self.unravel(idx);
        let sp = self.spacing();
        for a in 0..self.h {
            out[a] = -self.radius + sp * ix[a] as f64;
        }
    }

    /// Nearest lattice node to `z` (coordinates clamped into the box).
    pub fn nearest(&self, z: &[f64]) -> usize {
        let sp = self.spacing();
        let mut ix = [0usize; 3];
        for a in 0..self.h {
            let t = ((z[a] + self.radius) / sp).round();
            ix[a] = t.clamp(0.0, (self.n - 1) as f64) as usize;
        }
        self.index(ix)
    }

    /// Neighbor of `idx` along `offset`, if it stays inside the box.
    pub fn step(&self, ix: [usize; 3], offset: [i64; 3]) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..self.h {
            let t = ix[a] as i64 + offset[a];
            if t < 0 || t >= self.n as i64 {
                return None;
            }
            out[a] = t as usize;
        }
        Some(out)
    }
}
