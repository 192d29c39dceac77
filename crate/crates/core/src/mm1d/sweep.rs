//! The epsilon-sweep harness: minimize at each thickness, project the
//! result onto sharp labels, rebuild a recovery field from those
//! labels, and tabulate the three energies side by side.

use serde::Serialize;

use crate::energy::{diffuse_report, interface_energy_diffuse, mass_vector, sharp_report};
use crate::fields::{DeformationField, PhaseField};
use crate::interfacial::PhasePartition;
use crate::mm1d::recovery::recovery_sequence_2d;
use crate::optimize::{initial_phase, minimize_eps, MinimizeConfig, SeedPattern};
use crate::phases::PhaseSystem;
use crate::stored_energy::StoredEnergySpec;

/// A fixed geometry and energy setup swept over decreasing epsilons.
pub struct SweepScenario<'a> {
    pub sys: &'a PhaseSystem,
    pub spec: &'a StoredEnergySpec,
    /// Boundary data and initial deformation. Mark every node Dirichlet
    /// to freeze the geometry and sweep the phase field alone.
    pub y0: DeformationField,
    pub epsilons: Vec<f64>,
    pub seed_pattern: SeedPattern,
    pub noise_amplitude: f64,
    pub restarts: usize,
    /// Template for the per-epsilon minimizations; `epsilon` and `seed`
    /// are overwritten per run.
    pub minimize: MinimizeConfig,
    pub base_seed: u64,
}

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Best minimized diffuse total over the restarts.
    pub f_eps_min: f64,
    /// Diffuse total of the recovery field built from the projected
    /// labels.
    pub f_eps_recovery: f64,
    /// Sharp total of the projected labels.
    pub f0_sharp: f64,
    pub bulk: f64,
    pub interface: f64,
    pub mass_error: f64,
    pub restarts_used: usize,
    pub wall_time_s: f64,
    /// Every restart at this epsilon failed to produce a finite state.
    pub failed: bool,
}

/// Sharp projection: label each cell by the well nearest (in the
/// geodesic metric) to its average phase value.
pub fn project_to_labels(z: &PhaseField, sys: &PhaseSystem) -> PhasePartition {
    let grid = z.grid;
    let mut labels = Vec::with_capacity(grid.num_cells());
    let mut zbar = [0.0; 3];
    for c in 0..grid.num_cells() {
        let (i, j) = grid.cell_coords(c);
        z.cell_average(i, j, &mut zbar);
        labels.push(sys.nearest_well(&zbar[..z.h]));
    }
    PhasePartition::new(grid, sys.num_wells(), labels).expect("labels in range by construction")
}

/// Run the sweep. A failed minimization marks its row and the sweep
/// moves on.
pub fn gamma_sweep(scenario: &SweepScenario) -> Vec<SweepRow> {
    let sys = scenario.sys;
    let spec = scenario.spec;
    let mut rows = Vec::with_capacity(scenario.epsilons.len());
    for (k, &epsilon) in scenario.epsilons.iter().enumerate() {
        let started = std::time::Instant::now();
        let mut cfg = scenario.minimize.clone();
        cfg.epsilon = epsilon;

        let mut best: Option<crate::optimize::MinimizerState> = None;
        let mut used = 0;
        for restart in 0..scenario.restarts.max(1) {
            cfg.seed = scenario
                .base_seed
                .wrapping_add((k as u64) << 32)
                .wrapping_add(restart as u64);
            let z0 = initial_phase(
                scenario.y0.grid,
                sys,
                &scenario.seed_pattern,
                scenario.noise_amplitude,
                cfg.seed,
            );
            used += 1;
            if let Ok(state) = minimize_eps(&cfg, sys, spec, &scenario.y0, &z0) {
                let total = state.history.last().map_or(f64::INFINITY, |r| r.total);
                if total.is_finite()
                    && best
                        .as_ref()
                        .map_or(true, |b| total < b.history.last().unwrap().total)
                {
                    best = Some(state);
                }
            }
        }

        let Some(state) = best else {
            rows.push(SweepRow {
                epsilon,
                f_eps_min: f64::NAN,
                f_eps_recovery: f64::NAN,
                f0_sharp: f64::NAN,
                bulk: f64::NAN,
                interface: f64::NAN,
                mass_error: f64::NAN,
                restarts_used: used,
                wall_time_s: started.elapsed().as_secs_f64(),
                failed: true,
            });
            continue;
        };

        let part = project_to_labels(&state.z, sys);
        let recovery = recovery_sequence_2d(&state.def, &part, epsilon, sys);
        let recovery_report = diffuse_report(&state.def, &recovery, epsilon, sys, spec);
        let sharp = sharp_report(&state.def, &part, sys, spec);
        let mass_rec = mass_vector(&state.def, &recovery);
        let mass_sharp = crate::mm1d::recovery::partition_mass(&state.def, &part, sys);
        let mass_error = mass_rec
            .iter()
            .zip(&mass_sharp)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();

        // The recovery field is itself an admissible starting point; a
        // descent from it can only improve, which pins the minimized
        // column at or below the recovery column on every row.
        let mut final_report = state.history.last().unwrap().clone();
        if recovery_report.total.is_finite() {
            let mut rcfg = cfg.clone();
            rcfg.seed = scenario.base_seed.wrapping_add(0x5eed);
            if let Ok(rstate) = minimize_eps(&rcfg, sys, spec, &state.def, &recovery) {
                let rlast = rstate.history.last().unwrap();
                if rlast.total < final_report.total {
                    used += 1;
                    final_report = rlast.clone();
                }
            }
        }

        rows.push(SweepRow {
            epsilon,
            f_eps_min: final_report.total,
            f_eps_recovery: recovery_report.total,
            f0_sharp: sharp.total,
            bulk: final_report.bulk,
            interface: final_report.interface,
            mass_error,
            restarts_used: used,
            wall_time_s: started.elapsed().as_secs_f64(),
            failed: false,
        });
    }
    rows
}

/// Recovery-only convergence rows on a frozen deformation: no
/// minimization, just `|F_eps(recovery) - F_0| / F_0` per epsilon.
pub fn recovery_convergence_rows(
    def: &DeformationField,
    part: &PhasePartition,
    epsilons: &[f64],
    sys: &PhaseSystem,
    spec: &StoredEnergySpec,
) -> Vec<(f64, f64, f64, f64)> {
    let sharp = sharp_report(def, part, sys, spec);
    epsilons
        .iter()
        .map(|&eps| {
            let z = recovery_sequence_2d(def, part, eps, sys);
            let f_eps = interface_energy_diffuse(def, &z, eps, sys)
                + crate::energy::bulk_energy(def, &z, spec);
            let rel = (f_eps - sharp.total).abs() / sharp.total.abs().max(1e-300);
            (eps, f_eps, sharp.total, rel)
        })
        .collect()
}
