//! Alternating projected descent on the diffuse total energy.
//!
//! The objective is `bulk + diffuse interface` plus an optional
//! quadratic mass penalty. One outer iteration runs a block of
//! backtracking gradient steps on the node positions (Dirichlet nodes
//! frozen, trial steps rejected unless every cell keeps a healthy
//! determinant) followed by a block of projected gradient steps on the
//! phase field (Euclidean projection onto the ball `|z| <= R` after
//! each trial). Every accepted step strictly decreases the objective,
//! so the recorded history is nonincreasing by construction; with the
//! same inputs and seed the run is bit-reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{diffuse_report, EnergyReport};
use crate::error::{Error, Result};
use crate::fields::{shape_gradients_center, DeformationField, Grid, PhaseField};
use crate::math::{Mat2, Vec2};
use crate::params;
use crate::phases::PhaseSystem;
use crate::stored_energy::StoredEnergySpec;
use rand::Rng;

/// Knobs of [`minimize_eps`]; the defaults match the values used by the
/// verification suites.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeConfig {
    /// Interface thickness of the diffuse energy.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub inner_iters_y: usize,
    pub inner_iters_z: usize,
    /// Initial (and maximal) line-search steps per block.
    pub step_y: f64,
    pub step_z: f64,
    pub backtrack: f64,
    /// Sufficient-decrease constant of both line searches.
    pub armijo: f64,
    /// A trial step may shrink the smallest cell determinant to no less
    /// than this fraction of its current value.
    pub det_floor: f64,
    /// Relative objective-decrease threshold for convergence.
    pub tol: f64,
    pub mass_penalty_weight: f64,
    pub target_masses: Option<Vec<f64>>,
    /// Seeds initialization noise; the descent itself is deterministic.
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            epsilon: 0.1,
            max_outer_iters: 200,
            inner_iters_y: 4,
            inner_iters_z: 4,
            step_y: 0.1,
            step_z: 1.0,
            backtrack: params::BACKTRACK,
            armijo: params::ARMIJO_C,
            det_floor: params::DET_FLOOR_FRACTION,
            tol: 1e-8,
            mass_penalty_weight: 0.0,
            target_masses: None,
            seed: 0,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("step_y", self.step_y),
            ("step_z", self.step_z),
            ("armijo", self.armijo),
            ("tol", self.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSystem(format!("{name} must be positive")));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidSystem("backtrack must lie in (0, 1)".into()));
        }
        if !(self.det_floor > 0.0 && self.det_floor < 1.0) {
            return Err(Error::InvalidSystem("det_floor must lie in (0, 1)".into()));
        }
        if self.max_outer_iters == 0 || self.inner_iters_y == 0 || self.inner_iters_z == 0 {
            return Err(Error::InvalidSystem("iteration counts must be positive".into()));
        }
        if self.mass_penalty_weight < 0.0 {
            return Err(Error::InvalidSystem("mass_penalty_weight must be >= 0".into()));
        }
        if self.mass_penalty_weight > 0.0 && self.target_masses.is_none() {
            return Err(Error::InvalidSystem(
                "mass penalty enabled without target_masses".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// Relative objective decrease fell below the tolerance.
    Converged,
    MaxIters,
    /// Twenty consecutive line-search failures.
    Stagnation,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminationReason::Converged => write!(f, "converged"),
            TerminationReason::MaxIters => write!(f, "max-iters"),
            TerminationReason::Stagnation => write!(f, "stagnation"),
        }
    }
}

/// Final state of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizerState {
    pub def: DeformationField,
    pub z: PhaseField,
    /// One report per outer iteration, the initial state included.
    pub history: Vec<EnergyReport>,
    pub termination: TerminationReason,
}

const STAGNATION_LIMIT: usize = 20;

/// The minimized objective: total diffuse energy plus the optional mass
/// penalty `weight * sum_i (M_i(y, z) - target_i)^2`.
pub fn objective_value(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
    penalty_weight: f64,
    targets: Option<&[f64]>,
) -> f64 {
    let (bulk, interface, masses, _) = objective_parts(def, z, epsilon, sys, spec);
    bulk + interface + penalty(&masses[..z.h], penalty_weight, targets)
}

fn penalty(masses: &[f64], weight: f64, targets: Option<&[f64]>) -> f64 {
    match (weight > 0.0, targets) {
        (true, Some(t)) => {
            weight
                * masses
                    .iter()
                    .zip(t)
                    .map(|(m, t)| (m - t) * (m - t))
                    .sum::<f64>()
        }
        _ => 0.0,
    }
}

/// Single-pass assembly of bulk, interface, masses, and min det.
fn objective_parts(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
) -> (f64, f64, [f64; 3], f64) {
    let grid = def.grid;
    let h = z.h;
    let area = grid.cell_area();
    let cells: Vec<(f64, f64, [f64; 3], f64)> = (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let f = def.cell_gradient(i, j);
            let det = f.det();
            let mut zbar = [0.0; 3];
            z.cell_average(i, j, &mut zbar);
            if det <= 0.0 {
                return (f64::INFINITY, f64::INFINITY, [0.0; 3], det);
            }
            let bulk = spec.eval_w_unchecked(f, &zbar[..h]) * area;
            let cof = f.cof();
            let mut dz = [0.0; 6];
            z.cell_gradient(i, j, &mut dz);
            let mut frob_sq = 0.0;
            for a in 0..h {
                let g = cof * Vec2::new(dz[2 * a], dz[2 * a + 1]);
                frob_sq += g.dot(g) / (det * det);
            }
            let interface = (0.5 * epsilon * frob_sq + sys.eval_potential(&zbar[..h]) / epsilon)
                * det
                * area;
            let mut mass = [0.0; 3];
            for a in 0..h {
                mass[a] = zbar[a] * det * area;
            }
            (bulk, interface, mass, det)
        })
        .collect();
    let mut bulk = 0.0;
    let mut interface = 0.0;
    let mut masses = [0.0; 3];
    let mut min_det = f64::INFINITY;
    for (b, it, m, d) in &cells {
        bulk += b;
        interface += it;
        for a in 0..h {
            masses[a] += m[a];
        }
        min_det = min_det.min(*d);
    }
    (bulk, interface, masses, min_det)
}

/// Analytic gradient of the objective with respect to node positions
/// and node phase values. Dirichlet positions are not masked here.
pub fn assemble_gradients(
    def: &DeformationField,
    z: &PhaseField,
    epsilon: f64,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
    penalty_weight: f64,
    targets: Option<&[f64]>,
) -> (Vec<Vec2>, Vec<f64>) {
    let grid = def.grid;
    let h = z.h;
    let area = grid.cell_area();
    let shape = shape_gradients_center(&grid);

    // Mass residual factors (zero when the penalty is off).
    let mut mass_factor = [0.0; 3];
    if penalty_weight > 0.0 {
        if let Some(targets) = targets {
            let (_, _, masses, _) = objective_parts(def, z, epsilon, sys, spec);
            for a in 0..h {
                mass_factor[a] = 2.0 * penalty_weight * (masses[a] - targets[a]);
            }
        }
    }

    let cells: Vec<([Vec2; 4], [[f64; 3]; 4])> = (0..grid.num_cells())
        .into_par_iter()
        .map(|c| {
            let (i, j) = grid.cell_coords(c);
            let f = def.cell_gradient(i, j);
            let det = f.det();
            let cof = f.cof();
            let mut zbar = [0.0; 3];
            let mut dz = [0.0; 6];
            z.cell_average(i, j, &mut zbar);
            z.cell_gradient(i, j, &mut dz);

            // d(objective)/dF for this cell, times area.
            let mut df = spec.dw_df_unchecked(f, &zbar[..h]);
            let mut pot_grad = [0.0; 3];
            sys.potential_gradient(&zbar[..h], &mut pot_grad);
            let phi = sys.eval_potential(&zbar[..h]);
            // Interface terms: (eps/2) |cof F g_a|^2 / det and Phi det / eps.
            // In 2-D the cofactor is linear, so d|cof F g|^2/dF = 2 cof(c (x) g)
            // with c = cof F g.
            let mut interface_df = cof * (phi / epsilon);
            let mut spatial = [Vec2::ZERO; 3];
            for a in 0..h {
                let g = Vec2::new(dz[2 * a], dz[2 * a + 1]);
                let cgrad = cof * g;
                spatial[a] = cgrad;
                interface_df += Mat2::outer(cgrad, g).cof() * (epsilon / det)
                    + cof * (-0.5 * epsilon * cgrad.dot(cgrad) / (det * det));
            }
            df += interface_df;
            // Mass penalty: d(zbar_a det area)/dF = zbar_a cof.
            for a in 0..h {
                if mass_factor[a] != 0.0 {
                    df += cof * (mass_factor[a] * zbar[a]);
                }
            }

            let mut gy = [Vec2::ZERO; 4];
            for k in 0..4 {
                gy[k] = df * shape[k] * area;
            }

            // d(objective)/d z_{corner, a}.
            let mut gz = [[0.0; 3]; 4];
            let mut dw_dz = [0.0; 3];
            spec.dw_dz(f, &zbar[..h], &mut dw_dz);
            for k in 0..4 {
                for a in 0..h {
                    // Corner average carries 1/4; cell gradient carries
                    // the shape gradient.
                    let avg_part = 0.25
                        * (dw_dz[a] + pot_grad[a] * det / epsilon + mass_factor[a] * det);
                    let grad_part = epsilon / det * spatial[a].dot(cof * shape[k]);
                    gz[k][a] = (avg_part + grad_part) * area;
                }
            }
            (gy, gz)
        })
        .collect();

    let mut grad_y = vec![Vec2::ZERO; grid.num_nodes()];
    let mut grad_z = vec![0.0; grid.num_nodes() * h];
    for (c, (gy, gz)) in cells.iter().enumerate() {
        let (i, j) = grid.cell_coords(c);
        let corners = grid.cell_corners(i, j);
        for (k, &node) in corners.iter().enumerate() {
            grad_y[node] += gy[k];
            for a in 0..h {
                grad_z[node * h + a] += gz[k][a];
            }
        }
    }
    (grad_y, grad_z)
}

/// Nodewise Euclidean projection onto the ball `|z| <= r`. Bit-exactly
/// idempotent: the few-ulp overshoot a rescale can leave behind is
/// inside the comparison guard, so a second pass changes nothing.
pub fn project_phase(z: &PhaseField, r: f64) -> PhaseField {
    let mut out = z.clone();
    let guard = r * (1.0 + 4.0 * f64::EPSILON);
    for idx in 0..out.grid.num_nodes() {
        let node = out.node_mut(idx);
        let norm = node.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > guard {
            let s = r / norm;
            for v in node.iter_mut() {
                *v *= s;
            }
        }
    }
    out
}

/// Backtracking step on node positions that refuses to crush any cell:
/// a trial is accepted only if the smallest cell determinant stays above
/// `det_floor` times its current value and the energy decrease is
/// sufficient. Returns the accepted length (0 on failure) with the
/// accepted state and its energy.
pub fn safeguarded_step_y(
    def: &DeformationField,
    direction: &[Vec2],
    step: f64,
    det_floor: f64,
    backtrack: f64,
    armijo: f64,
    current: f64,
    energy: impl Fn(&DeformationField) -> f64,
) -> (f64, Option<(DeformationField, f64)>) {
    let dir_sq: f64 = direction.iter().map(|d| d.dot(*d)).sum();
    let floor = det_floor * def.min_det();
    let mut s = step;
    for _ in 0..params::MAX_BACKTRACKS {
        let mut trial = def.clone();
        for (v, d) in trial.values.iter_mut().zip(direction) {
            *v += *d * s;
        }
        if trial.min_det() >= floor {
            let e = energy(&trial);
            if e <= current - armijo * s * dir_sq {
                return (s, Some((trial, e)));
            }
        }
        if dir_sq == 0.0 {
            // Nothing to move; the full step was already accepted above
            // unless the energy callback disagrees with `current`.
            return (0.0, None);
        }
        s *= backtrack;
    }
    (0.0, None)
}

/// Block-alternating minimization of the diffuse energy at fixed
/// `epsilon`. Computes a critical point, not a global minimum.
pub fn minimize_eps(
    cfg: &MinimizeConfig,
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
    init_def: &DeformationField,
    init_z: &PhaseField,
) -> Result<MinimizerState> {
    cfg.validate()?;
    if init_def.grid != init_z.grid {
        return Err(Error::ShapeMismatch("deformation and phase grids differ".into()));
    }
    if init_z.h != sys.h() || init_z.h != spec.h() {
        return Err(Error::ShapeMismatch(format!(
            "phase dimension {} does not match system ({}) or energy ({})",
            init_z.h,
            sys.h(),
            spec.h()
        )));
    }
    if !init_def.is_finite() || !init_z.is_finite() {
        return Err(Error::NonFinite {
            context: "minimizer initialization",
        });
    }
    let min_det = init_def.min_det();
    if min_det <= 0.0 {
        return Err(Error::InvalidSystem(format!(
            "initial deformation has min cell det {min_det} <= 0"
        )));
    }
    let r = sys.box_radius();
    if init_z.max_norm() > r + 1e-12 {
        return Err(Error::InvalidSystem(format!(
            "initial phase field leaves the box: max |z| = {} > {r}",
            init_z.max_norm()
        )));
    }
    if let Some(t) = &cfg.target_masses {
        if t.len() != init_z.h {
            return Err(Error::ShapeMismatch(format!(
                "{} target masses for h = {}",
                t.len(),
                init_z.h
            )));
        }
    }

    let targets = cfg.target_masses.as_deref();
    let weight = cfg.mass_penalty_weight;
    let objective =
        |d: &DeformationField, z: &PhaseField| objective_value(d, z, cfg.epsilon, sys, spec, weight, targets);

    let mut def = init_def.clone();
    let mut z = init_z.clone();
    let mut cur = objective(&def, &z);
    if !cur.is_finite() {
        return Err(Error::InvalidSystem(
            "initial objective is not finite".into(),
        ));
    }

    let record = |def: &DeformationField, z: &PhaseField, obj: f64, sy: f64, sz: f64| {
        let mut rep = diffuse_report(def, z, cfg.epsilon, sys, spec);
        rep.diagnostics.insert("objective".into(), obj);
        rep.diagnostics
            .insert("mass_penalty".into(), obj - rep.total);
        rep.diagnostics.insert("step_y".into(), sy);
        rep.diagnostics.insert("step_z".into(), sz);
        rep
    };

    let mut history = vec![record(&def, &z, cur, 0.0, 0.0)];
    let mut step_y = cfg.step_y;
    let mut step_z = cfg.step_z;
    let mut consecutive_failures = 0usize;
    let mut termination = TerminationReason::MaxIters;

    for _outer in 0..cfg.max_outer_iters {
        let prev = cur;
        let mut last_sy = 0.0;
        let mut last_sz = 0.0;

        // Block 1: node positions.
        for _ in 0..cfg.inner_iters_y {
            let (mut gy, _) =
                assemble_gradients(&def, &z, cfg.epsilon, sys, spec, weight, targets);
            for (g, &fixed) in gy.iter_mut().zip(&def.dirichlet) {
                if fixed {
                    *g = Vec2::ZERO;
                }
            }
            let gnorm_sq: f64 = gy.iter().map(|g| g.dot(*g)).sum();
            if gnorm_sq < 1e-30 {
                break;
            }
            let dir: Vec<Vec2> = gy.iter().map(|g| -*g).collect();
            let (s, outcome) = safeguarded_step_y(
                &def,
                &dir,
                step_y,
                cfg.det_floor,
                cfg.backtrack,
                cfg.armijo,
                cur,
                |d| objective(d, &z),
            );
            match outcome {
                Some((trial, e)) => {
                    def = trial;
                    cur = e;
                    last_sy = s;
                    step_y = (s * 2.0).min(cfg.step_y);
                    consecutive_failures = 0;
                }
                None => {
                    consecutive_failures += 1;
                    break;
                }
            }
        }

        // Block 2: phase values, projected onto |z| <= R.
        for _ in 0..cfg.inner_iters_z {
            let (_, gz) = assemble_gradients(&def, &z, cfg.epsilon, sys, spec, weight, targets);
            let gnorm_sq: f64 = gz.iter().map(|g| g * g).sum();
            if gnorm_sq < 1e-30 {
                break;
            }
            let mut s = step_z;
            let mut accepted = false;
            for _ in 0..params::MAX_BACKTRACKS {
                let mut trial = z.clone();
                for (v, g) in trial.values.iter_mut().zip(&gz) {
                    *v -= s * g;
                }
                let trial = project_phase(&trial, r);
                let moved_sq: f64 = trial
                    .values
                    .iter()
                    .zip(&z.values)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if moved_sq == 0.0 {
                    break;
                }
                let e = objective(&def, &trial);
                if e <= cur - cfg.armijo / s * moved_sq {
                    z = trial;
                    cur = e;
                    last_sz = s;
                    step_z = (s * 2.0).min(cfg.step_z);
                    accepted = true;
                    break;
                }
                s *= cfg.backtrack;
            }
            if accepted {
                consecutive_failures = 0;
            } else {
                consecutive_failures += 1;
                break;
            }
        }

        history.push(record(&def, &z, cur, last_sy, last_sz));
        let rel = (prev - cur) / prev.abs().max(1.0);
        if rel <= cfg.tol {
            termination = TerminationReason::Converged;
            break;
        }
        if consecutive_failures >= STAGNATION_LIMIT {
            termination = TerminationReason::Stagnation;
            break;
        }
    }

    Ok(MinimizerState {
        def,
        z,
        history,
        termination,
    })
}

/// Seed layouts for the initial phase field.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedPattern {
    /// Vertical stripes cycling through the wells.
    Stripes { count: usize },
    /// Independent uniform well choice per node.
    Random,
    /// One well everywhere.
    Well { index: usize },
}

/// Well-valued seed field plus uniform noise, projected into the box.
pub fn initial_phase(
    grid: Grid,
    sys: &PhaseSystem,
    pattern: &SeedPattern,
    noise_amplitude: f64,
    seed: u64,
) -> PhaseField {
    let wells = sys.wells();
    let m = wells.len();
    let h = sys.h();
    let mut rng = crate::rng(seed);
    let mut values = vec![0.0; grid.num_nodes() * h];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let idx = grid.node_index(i, j);
            let well = match pattern {
                SeedPattern::Stripes { count } => {
                    let stripe =
                        ((i as f64 / (grid.nx + 1) as f64) * *count as f64).floor() as usize;
                    &wells[stripe.min(count.saturating_sub(1)) % m]
                }
                SeedPattern::Random => &wells[rng.random_range(0..m)],
                SeedPattern::Well { index } => &wells[*index % m],
            };
            for a in 0..h {
                values[idx * h + a] =
                    well[a] + rng.random_range(-noise_amplitude..=noise_amplitude);
            }
        }
    }
    project_phase(&PhaseField { grid, h, values }, sys.box_radius())
}

/// Transfinite (Coons) interpolation of boundary data into the
/// interior; reproduces affine maps exactly. The boundary ring is
/// marked Dirichlet.
pub fn coons_deformation(grid: Grid, boundary: impl Fn(Vec2) -> Vec2) -> DeformationField {
    let mut def = DeformationField::identity(grid);
    let f = |i: usize, j: usize| boundary(grid.node_pos(i, j));
    let (nx, ny) = (grid.nx, grid.ny);
    for j in 0..=ny {
        for i in 0..=nx {
            let xi = i as f64 / nx as f64;
            let eta = j as f64 / ny as f64;
            let v = f(0, j) * (1.0 - xi) + f(nx, j) * xi + f(i, 0) * (1.0 - eta)
                + f(i, ny) * eta
                - f(0, 0) * ((1.0 - xi) * (1.0 - eta))
                - f(nx, 0) * (xi * (1.0 - eta))
                - f(0, ny) * ((1.0 - xi) * eta)
                - f(nx, ny) * (xi * eta);
            def.values[grid.node_index(i, j)] = v;
        }
    }
    def
}
