//! Assembled energy totals: bulk, diffuse interface, sharp interface.
//!
//! All integrals live on the reference grid; the phase field stores the
//! composition `z = zeta o y` directly, so deformed-configuration
//! integrals are pulled back with the area formula (`det grad y` as the
//! Jacobian and `(grad y)^{-T}` on reference gradients) and no inverse
//! deformation is ever evaluated. An inverted cell turns the affected
//! totals into a `+inf` sentinel rather than an error.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::fields::{DeformationField, PhaseField};
use crate::interfacial::{deformed_perimeter, InterfaceAreas, PhasePartition};
use crate::phases::{DistanceMatrix, PhaseSystem};
use crate::stored_energy::StoredEnergySpec;

/// Interface-thickness tag of an energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonTag {
    Diffuse(f64),
    Sharp,
}

/// One energy evaluation with its diagnostics.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub bulk: f64,
    pub interface: f64,
    /// Always `bulk + interface`.
    pub total: f64,
    pub epsilon: EpsilonTag,
    /// Deformed interface areas per label pair; sharp evaluations only.
    pub areas: Option<InterfaceAreas>,
    pub diagnostics: BTreeMap<String, f64>,
}

fn json_real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

impl EnergyReport {
    fn new(bulk: f64, interface: f64, epsilon: EpsilonTag) -> Self {
        EnergyReport {
            bulk,
            interface,
            total: bulk + interface,
            epsilon,
            areas: None,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }

    /// JSON object with non-finite reals spelled as strings.
    pub fn to_json(&self) -> Value {
        let eps = match self.epsilon {
            EpsilonTag::Diffuse(e) => json!(e),
            EpsilonTag::Sharp => json!("sharp"),
        };
        let diagnostics: Value = self
            .diagnostics
            .iter()
            .map(|(k, &v)| (k.clone(), json_real(v)))
            .collect::<serde_json::Map<_, _>>()
            .into();
        let mut obj = json!({
            "bulk": json_real(self.bulk),
            "interface": json_real(self.interface),
            "total": json_real(self.total),
            "epsilon": eps,
            "diagnostics": diagnostics,
        });
        if let Some(areas) = &self.areas {
            let rows: Vec<Vec<f64>> = (0..areas.m)
                .map(|a| (0..areas.m).map(|b| areas.get(a, b)).collect())
                .collect();
            obj["interface_areas"] = json!(rows);
        }
        obj
    }
}

/// `sum_cells W(grad y, z) * area` with `z` averaged onto cell centers.
///
/// Returns `+inf` if any cell has `det grad y <= 0` or `W` hits its
/// sentinel.
pub fn bulk_energy(def: &DeformationField, z: &PhaseField, spec: &StoredEnergySpec) -> f64 {
    assert_eq!(def.grid, z.grid, "fields live on different grids");
    assert_eq!(z.h, spec.h(), "phase dimension mismatch");
    let grid = def.grid;
    let area = grid.cell_area();
    let terms: Vec<f64> = (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let f = def.cell_gradient(i, j);
            let mut zbar = [0.0; 3];
            z.cell_average(i, j, &mut zbar);
            spec.eval_w_unchecked(f, &zbar[..z.h]) * area
        })
        .collect();
    terms.iter().sum()
}

/// Per-cell pieces of the diffuse interface integrand.
struct DiffuseCell {
    grad_term: f64,
    pot_term: f64,
    sup_term: f64,
    det: f64,
}

fn diffuse_cells(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
    with_sup: bool,
) -> Vec<DiffuseCell> {
    let grid = def.grid;
    let h = z.h;
    let area = grid.cell_area();
    let tables = if with_sup {
        Some(sys.well_distance_fields())
    } else {
        None
    };
    (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let f = def.cell_gradient(i, j);
            let det = f.det();
            if det <= 0.0 {
                return DiffuseCell {
                    grad_term: f64::INFINITY,
                    pot_term: f64::INFINITY,
                    sup_term: 0.0,
                    det,
                };
            }
            let cof = f.cof();
            let mut zbar = [0.0; 3];
            let mut dz = [0.0; 6];
            z.cell_average(i, j, &mut zbar);
            z.cell_gradient(i, j, &mut dz);
            // Spatial phase gradient: grad zeta = (grad y)^{-T} grad z,
            // with (grad y)^{-T} = cof / det.
            let mut frob_sq = 0.0;
            for a in 0..h {
                let g = cof * crate::math::Vec2::new(dz[2 * a], dz[2 * a + 1]);
                frob_sq += g.dot(g) / (det * det);
            }
            let grad_term = 0.5 * epsilon * frob_sq * det * area;
            let pot_term = sys.eval_potential(&zbar[..h]) / epsilon * det * area;
            let sup_term = if let Some(tables) = tables {
                let mut worst = 0.0f64;
                let mut gphi = [0.0; 3];
                for table in tables {
                    table.gradient_clamped(sys.potential(), &zbar[..h], &mut gphi);
                    // Chain rule: grad(phi o z) = sum_a dphi/dz_a grad z_a.
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for a in 0..h {
                        gx += gphi[a] * dz[2 * a];
                        gy += gphi[a] * dz[2 * a + 1];
                    }
                    let spatial = cof * crate::math::Vec2::new(gx, gy);
                    worst = worst.max(spatial.norm() / det);
                }
                worst * det * area
            } else {
                0.0
            };
            DiffuseCell {
                grad_term,
                pot_term,
                sup_term,
                det,
            }
        })
        .collect()
}

/// Diffuse interfacial energy at thickness `epsilon`, pulled back to the
/// reference grid: `sum [ (eps/2)|(grad y)^{-T} grad z|^2 + Phi(z)/eps ]
/// det grad y * area`.
pub fn interface_energy_diffuse(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
) -> f64 {
    assert_eq!(def.grid, z.grid, "fields live on different grids");
    assert_eq!(z.h, sys.h(), "phase dimension mismatch");
    assert!(epsilon > 0.0, "epsilon must be positive");
    diffuse_cells(def, z, epsilon, sys, false)
        .iter()
        .map(|c| c.grad_term + c.pot_term)
        .sum()
}

/// Sharp interfacial energy `1/2 sum_{a,b} d_ab * area_ab` over the
/// deformed partition interfaces.
pub fn interface_energy_sharp(
    def: &DeformationField,
    part: &PhasePartition,
    d: &DistanceMatrix,
) -> f64 {
    assert_eq!(d.size(), part.m, "distance matrix size mismatch");
    let areas = deformed_perimeter(def, part);
    let mut acc = 0.0;
    for a in 0..part.m {
        for b in 0..part.m {
            if a != b {
                acc += 0.5 * d.get(a, b) * areas.get(a, b);
            }
        }
    }
    acc
}

/// Interface lower-bound pair: the diffuse energy and the
/// supremum-measure surrogate `sum max_a |(grad y)^{-T} grad(phi_a o z)|
/// det * area`. The first dominates the second for every state.
pub fn liminf_diagnostic(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
) -> (f64, f64) {
    assert_eq!(def.grid, z.grid, "fields live on different grids");
    assert_eq!(z.h, sys.h(), "phase dimension mismatch");
    let cells = diffuse_cells(def, z, epsilon, sys, true);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for c in &cells {
        lhs += c.grad_term + c.pot_term;
        rhs += c.sup_term;
    }
    if !lhs.is_finite() {
        return (f64::INFINITY, f64::INFINITY);
    }
    (lhs, rhs)
}

/// Deformed-configuration phase masses `M_i = sum z_i det grad y * area`.
pub fn mass_vector(def: &DeformationField, z: &PhaseField) -> Vec<f64> {
    assert_eq!(def.grid, z.grid, "fields live on different grids");
    let grid = def.grid;
    let area = grid.cell_area();
    let per_cell: Vec<[f64; 3]> = (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let det = def.cell_gradient(i, j).det();
            let mut zbar = [0.0; 3];
            z.cell_average(i, j, &mut zbar);
            let mut out = [0.0; 3];
            for a in 0..z.h {
                out[a] = zbar[a] * det * area;
            }
            out
        })
        .collect();
    let mut mass = vec![0.0; z.h];
    for cell in &per_cell {
        for a in 0..z.h {
            mass[a] += cell[a];
        }
    }
    mass
}

/// Full diffuse evaluation with the standard diagnostics attached.
pub fn diffuse_report(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
) -> EnergyReport {
    let bulk = bulk_energy(def, z, spec);
    let cells = diffuse_cells(def, z, epsilon, sys, true);
    let mut grad_part = 0.0;
    let mut pot_part = 0.0;
    let mut rhs = 0.0;
    let mut min_det = f64::INFINITY;
    for c in &cells {
        grad_part += c.grad_term;
        pot_part += c.pot_term;
        rhs += c.sup_term;
        min_det = min_det.min(c.det);
    }
    let interface = grad_part + pot_part;
    let mut report = EnergyReport::new(bulk, interface, EpsilonTag::Diffuse(epsilon));
    let d = &mut report.diagnostics;
    d.insert("liminf_lhs".into(), interface);
    d.insert(
        "liminf_rhs".into(),
        if interface.is_finite() { rhs } else { f64::INFINITY },
    );
    d.insert("grad_part".into(), grad_part);
    d.insert("potential_part".into(), pot_part);
    let denom = interface.abs().max(1e-300);
    d.insert(
        "equipartition_gap".into(),
        (grad_part - pot_part).abs() / denom,
    );
    d.insert("min_det".into(), min_det);
    for (a, m) in mass_vector(def, z).into_iter().enumerate() {
        d.insert(format!("mass_{a}"), m);
    }
    report
}

/// Sharp evaluation of a labeled partition: bulk with each cell sitting
/// exactly at its phase well, plus the distance-weighted deformed
/// interface areas.
pub fn sharp_report(
    def: &DeformationField,
    part: &PhasePartition,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
) -> EnergyReport {
    assert_eq!(def.grid, part.grid, "fields live on different grids");
    let grid = def.grid;
    let area = grid.cell_area();
    let wells = sys.wells();
    let terms: Vec<f64> = (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let f = def.cell_gradient(i, j);
            spec.eval_w_unchecked(f, &wells[part.labels[c]]) * area
        })
        .collect();
    let bulk: f64 = terms.iter().sum();

    let d = sys.distance_matrix();
    let areas = deformed_perimeter(def, part);
    let mut interface = 0.0;
    for a in 0..part.m {
        for b in 0..part.m {
            if a != b {
                interface += 0.5 * d.get(a, b) * areas.get(a, b);
            }
        }
    }
    let mut report = EnergyReport::new(bulk, interface, EpsilonTag::Sharp);
    let mut min_det = f64::INFINITY;
    for c in 0..grid.num_cells() {
        let (i, j) = grid.cell_coords(c);
        min_det = min_det.min(def.cell_gradient(i, j).det());
    }
    report.diagnostics.insert("min_det".into(), min_det);
    report.areas = Some(areas);
    report
}
