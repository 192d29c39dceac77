//! Phase space: multi-well potentials and geodesic well distances.
//!
//! The interfacial cost between two material phases is the geodesic
//! distance between their wells under the degenerate Riemannian metric
//! `sqrt(2 Phi(z)) |dz|`. Distances are computed in two stages: a
//! Dijkstra sweep on a uniform lattice over the phase box gives a
//! connecting path, and projected-gradient refinement of that polyline
//! tightens the value. The pairwise distance matrix is symmetrized and
//! closed under the triangle inequality (concatenation of admissible
//! paths is admissible, so the metric closure never undershoots the
//! true geodesic distance).

mod dijkstra;
mod lattice;
mod potential;
mod refine;
mod table;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DEFAULT_LATTICE_POINTS, REFINE_MAX_ITERS, REFINE_NODES};

pub use lattice::PhaseLattice;
pub use potential::Potential;
pub use refine::{path_energy, refine, resample};
pub use table::WellDistanceField;

/// A multi-well phase system: the potential, its wells, and the box
/// `[-R, R]^h` on which geodesic searches run.
#[derive(Debug)]
pub struct PhaseSystem {
    potential: Potential,
    wells: Vec<Vec<f64>>,
    box_radius: f64,
    lattice_points: usize,
    distances: OnceLock<DistanceMatrix>,
    tables: OnceLock<Vec<WellDistanceField>>,
}

/// Result of a single geodesic computation.
#[derive(Debug, Clone)]
pub struct Geodesic {
    /// Final distance estimate (never above `raw_lattice`).
    pub distance: f64,
    /// Lattice Dijkstra value, including the snap connectors at both ends.
    pub raw_lattice: f64,
    /// Polyline realizing `distance`.
    pub path: Vec<Vec<f64>>,
}

/// Symmetric matrix of pairwise well distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    m: usize,
    d: Vec<f64>,
    /// Largest shortening applied by the metric closure, for diagnostics.
    pub closure_correction: f64,
}

/// One violated triangle inequality: `d(i,k) > d(i,j) + d(j,k) + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub excess: f64,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.m + b]
    }

    fn set_sym(&mut self, a: usize, b: usize, v: f64) {
        self.d[a * self.m + b] = v;
        self.d[b * self.m + a] = v;
    }

    /// Min-plus closure: replace every entry by the shortest well-to-well
    /// relay. Records the largest correction made.
    fn close(&mut self) {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for i in 0..m {
                for k in 0..m {
                    let relay = self.get(i, j) + self.get(j, k);
                    let direct = self.get(i, k);
                    if relay < direct {
                        worst = worst.max(direct - relay);
                        self.set_sym(i, k, relay);
                    }
                }
            }
        }
        self.closure_correction = worst;
    }
}

/// List all triangle inequality violations beyond `tol`.
pub fn check_triangle(d: &DistanceMatrix, tol: f64) -> Vec<TriangleViolation> {
    let m = d.size();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                if i == j || j == k || i == k {
                    continue;
                }
                let excess = d.get(i, k) - d.get(i, j) - d.get(j, k);
                if excess > tol {
                    out.push(TriangleViolation { i, j, k, excess });
                }
            }
        }
    }
    out
}

impl PhaseSystem {
    /// Build and validate a system. `box_radius` must strictly contain
    /// every well; the potential must vanish at its wells and be
    /// positive on a sample of off-well box points.
    pub fn new(potential: Potential, box_radius: f64, lattice_points: usize) -> Result<Self> {
        let h = potential.dim();
        if h == 0 || h > 3 {
            return Err(Error::UnsupportedDimension { h });
        }
        let wells = potential.wells();
        if wells.len() < 2 {
            return Err(Error::InvalidSystem(format!(
                "need at least 2 wells, got {}",
                wells.len()
            )));
        }
        if wells.iter().any(|w| w.len() != h) {
            return Err(Error::InvalidSystem(
                "wells have inconsistent dimensions".into(),
            ));
        }
        if !(box_radius.is_finite() && box_radius > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "box radius {box_radius} invalid"
            )));
        }
        for (i, w) in wells.iter().enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { context: "well" });
            }
            let norm = norm(w);
            if norm >= box_radius {
                return Err(Error::InvalidSystem(format!(
                    "well {i} with |p| = {norm} not strictly inside box radius {box_radius}"
                )));
            }
            let val = potential.eval(w);
            if val != 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "potential does not vanish at well {i}: Phi = {val}"
                )));
            }
            for (j, v) in wells.iter().enumerate().skip(i + 1) {
                if dist(w, v) < 1e-9 {
                    return Err(Error::InvalidSystem(format!(
                        "wells {i} and {j} coincide"
                    )));
                }
            }
        }
        // Positivity scan on a coarse sub-lattice away from the wells.
        let scan = PhaseLattice::new(h, 21, box_radius)?;
        let mut z = [0.0; 3];
        for idx in 0..scan.len() {
            scan.point(idx, &mut z);
            let zz = &z[..h];
            let away = wells.iter().map(|w| dist(w, zz)).fold(f64::MAX, f64::min);
            if away > 1e-3 && potential.eval(zz) <= 0.0 {
                return Err(Error::InvalidSystem(format!(
                    "potential not positive away from wells (Phi({zz:?}) = {})",
                    potential.eval(zz)
                )));
            }
        }
        if lattice_points < 3 {
            return Err(Error::InvalidSystem(format!(
                "lattice_points = {lattice_points} too small"
            )));
        }
        Ok(PhaseSystem {
            potential,
            wells,
            box_radius,
            lattice_points,
            distances: OnceLock::new(),
            tables: OnceLock::new(),
        })
    }

    /// System with the default lattice resolution.
    pub fn with_default_lattice(potential: Potential, box_radius: f64) -> Result<Self> {
        Self::new(potential, box_radius, DEFAULT_LATTICE_POINTS)
    }

    pub fn h(&self) -> usize {
        self.potential.dim()
    }

    /// Number of wells `m`.
    pub fn num_wells(&self) -> usize {
        self.wells.len()
    }

    pub fn wells(&self) -> &[Vec<f64>] {
        &self.wells
    }

    pub fn box_radius(&self) -> f64 {
        self.box_radius
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `Phi(z)`.
    pub fn eval_potential(&self, z: &[f64]) -> f64 {
        self.potential.eval(z)
    }

    /// `grad Phi(z)` into `out`.
    pub fn potential_gradient(&self, z: &[f64], out: &mut [f64]) {
        self.potential.gradient(z, out)
    }

    fn lattice(&self) -> PhaseLattice {
        PhaseLattice::new(self.h(), self.lattice_points, self.box_radius)
            .expect("validated at construction")
    }

    fn check_point(&self, z: &[f64], context: &'static str) -> Result<()> {
        if z.len() != self.h() {
            return Err(Error::ShapeMismatch(format!(
                "{context}: point has dimension {}, system has h = {}",
                z.len(),
                self.h()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "phase point" });
        }
        let n = norm(z);
        if n > self.box_radius {
            return Err(Error::OutsideBox {
                radius: self.box_radius,
                norm: n,
            });
        }
        Ok(())
    }

    /// Geodesic distance between two points of the phase box.
    ///
    /// Dijkstra on the lattice seeds a polyline through the snapped
    /// endpoints; the polyline is resampled to [`REFINE_NODES`] nodes and
    /// refined. The reported distance is the smaller of the refined cost
    /// and the raw lattice cost, so refinement can only help.
    pub fn geodesic_distance(&self, a: &[f64], b: &[f64]) -> Result<Geodesic> {
        self.check_point(a, "geodesic endpoint a")?;
        self.check_point(b, "geodesic endpoint b")?;
        if dist(a, b) < 1e-15 {
            return Ok(Geodesic {
                distance: 0.0,
                raw_lattice: 0.0,
                path: vec![a.to_vec(), b.to_vec()],
            });
        }
        let lat = self.lattice();
        let ia = lat.nearest(a);
        let ib = lat.nearest(b);
        let (lattice_cost, node_path) = dijkstra::point_to_point(&lat, &self.potential, ia, ib);

        // Polyline through the exact endpoints and the lattice path.
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(node_path.len() + 2);
        pts.push(a.to_vec());
        let mut buf = [0.0; 3];
        for &node in &node_path {
            lat.point(node, &mut buf);
            let p = buf[..self.h()].to_vec();
            if dist(pts.last().unwrap(), &p) > 1e-14 {
                pts.push(p);
            }
        }
        pts.push(b.to_vec());
        // Raw cost including the endpoint connectors outside the lattice.
        let start_pt = node_point(&lat, node_path[0], self.h());
        let end_pt = node_point(&lat, *node_path.last().unwrap(), self.h());
        let raw = lattice_cost
            + path_energy(&self.potential, &[a.to_vec(), start_pt])
            + path_energy(&self.potential, &[end_pt, b.to_vec()]);

        let mut refined = resample(&pts, REFINE_NODES);
        let initial_step = lat.spacing();
        let cost = refine(
            &self.potential,
            &mut refined,
            self.box_radius,
            initial_step,
            REFINE_MAX_ITERS,
        );

        if cost <= raw {
            Ok(Geodesic {
                distance: cost,
                raw_lattice: raw,
                path: refined,
            })
        } else {
            Ok(Geodesic {
                distance: raw,
                raw_lattice: raw,
                path: pts,
            })
        }
    }

    /// Geodesic distance from well `alpha` to an arbitrary point.
    pub fn well_distance(&self, alpha: usize, z: &[f64]) -> Result<f64> {
        assert!(alpha < self.num_wells(), "well index out of range");
        Ok(self.geodesic_distance(&self.wells[alpha].clone(), z)?.distance)
    }

    /// Pairwise well distance matrix, computed once and cached.
    ///
    /// Each unordered pair is searched in both directions (the refinement
    /// is not exactly symmetric) and the smaller value kept; the matrix
    /// is then closed under the triangle inequality.
    pub fn distance_matrix(&self) -> &DistanceMatrix {
        self.distances.get_or_init(|| {
            let m = self.num_wells();
            let mut pairs = Vec::new();
            for a in 0..m {
                for b in a + 1..m {
                    pairs.push((a, b));
                }
            }
            let computed: Vec<(usize, usize, f64)> = pairs
                .par_iter()
                .map(|&(a, b)| {
                    let fwd = self
                        .geodesic_distance(&self.wells[a], &self.wells[b])
                        .expect("wells are admissible endpoints");
                    let bwd = self
                        .geodesic_distance(&self.wells[b], &self.wells[a])
                        .expect("wells are admissible endpoints");
                    (a, b, fwd.distance.min(bwd.distance))
                })
                .collect();
            let mut matrix = DistanceMatrix {
                m,
                d: vec![0.0; m * m],
                closure_correction: 0.0,
            };
            for (a, b, v) in computed {
                matrix.set_sym(a, b, v);
            }
            matrix.close();
            matrix
        })
    }

    /// Distance fields `phi_alpha` on the lattice, one per well,
    /// computed once and cached.
    pub fn well_distance_fields(&self) -> &[WellDistanceField] {
        self.tables.get_or_init(|| {
            let lat = self.lattice();
            (0..self.num_wells())
                .into_par_iter()
                .map(|alpha| {
                    let lat = lat.clone();
                    let src = lat.nearest(&self.wells[alpha]);
                    let values = dijkstra::single_source(&lat, &self.potential, src);
                    WellDistanceField::new(alpha, lat, values)
                })
                .collect()
        })
    }

    /// Index of the geodesically nearest well; ties resolve to the
    /// lowest index.
    pub fn nearest_well(&self, z: &[f64]) -> usize {
        let fields = self.well_distance_fields();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (alpha, f) in fields.iter().enumerate() {
            let d = f.value(z);
            if d < best_d {
                best_d = d;
                best = alpha;
            }
        }
        best
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn node_point(lat: &PhaseLattice, node: usize, h: usize) -> Vec<f64> {
    let mut buf = [0.0; 3];
    lat.point(node, &mut buf);
    buf[..h].to_vec()
}
