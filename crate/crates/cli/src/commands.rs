//! Subcommand implementations: each builds what it needs from the
//! resolved configuration, runs one core routine, and writes the
//! artifacts selected by the output section.

use std::io::Write as _;
use std::path::Path;

use elastophase_core::{
    check_triangle, coons_deformation, diffuse_report, gamma_sweep as run_sweep, initial_phase,
    liminf_diagnostic, mass_vector, minimize_eps, open_csv, optimal_profile, profile_sample_count,
    project_to_labels, read_deformation, read_phase, sharp_report, write_deformation,
    write_distance_csv, write_history_csv, write_phase, write_sweep_csv, SeedPattern,
    SweepScenario,
};
use serde_json::json;

use crate::config::{OutputFormat, ScenarioName};
use crate::error::{CliError, CliResult};
use crate::output::RunContext;

/// Tabulate pairwise geodesic distances and audit the metric.
pub fn distance(ctx: &RunContext) -> CliResult<()> {
    let sys = ctx.config.build_system()?;
    let d = sys.distance_matrix();
    let m = d.size();
    for a in 0..m {
        for b in 0..m {
            if !d.get(a, b).is_finite() {
                return Err(CliError::Numerical(format!(
                    "distance ({a}, {b}) is non-finite (stage: geodesic distance table)"
                )));
            }
        }
    }
    let violations = check_triangle(d, 1e-6);

    if ctx.config.output.wants(OutputFormat::Csv) {
        write_distance_csv(&ctx.path("distance.csv"), d, &ctx.meta_lines())?;
        ctx.say(&format!("wrote {}", ctx.path("distance.csv").display()));
    }
    if ctx.config.output.wants(OutputFormat::Json) {
        let matrix: Vec<Vec<f64>> = (0..m)
            .map(|a| (0..m).map(|b| d.get(a, b)).collect())
            .collect();
        ctx.write_json(
            "distance.json",
            &json!({
                "wells": sys.wells(),
                "matrix": matrix,
                "closure_correction": d.closure_correction,
                "triangle_tolerance": 1e-6,
                "triangle_violations": violations,
            }),
        )?;
    }
    ctx.say(&format!(
        "{m} wells, {} triangle violations at 1e-6",
        violations.len()
    ));
    Ok(())
}

/// Solve the optimal transition profile for every well pair at every
/// sweep thickness.
pub fn profile(ctx: &RunContext) -> CliResult<()> {
    let sys = ctx.config.build_system()?;
    let m = sys.num_wells();
    let h = sys.h();

    let mut csv = if ctx.config.output.wants(OutputFormat::Csv) {
        let mut w = open_csv(&ctx.path("profiles.csv"), "profiles", &ctx.meta_lines())?;
        let comps: Vec<String> = (0..h).map(|a| format!("z{a}")).collect();
        writeln!(w, "alpha,beta,epsilon,s,{}", comps.join(","))
            .map_err(|e| CliError::Validation(format!("write profiles.csv: {e}")))?;
        Some(w)
    } else {
        None
    };

    let mut summaries = Vec::new();
    for alpha in 0..m {
        for beta in alpha + 1..m {
            for &eps in &ctx.config.sweep.epsilons {
                let half_width = 10.0 * eps;
                let n = profile_sample_count(eps, half_width);
                let p = optimal_profile(&sys, alpha, beta, eps, half_width, n)?;
                if !p.energy.is_finite() {
                    return Err(CliError::Numerical(format!(
                        "profile ({alpha}, {beta}) at epsilon {eps} is non-finite \
                         (stage: transition profile solve)"
                    )));
                }
                summaries.push(json!({
                    "alpha": alpha,
                    "beta": beta,
                    "epsilon": eps,
                    "half_width": half_width,
                    "samples": p.samples.len(),
                    "energy": p.energy,
                    "grad_part": p.grad_part,
                    "pot_part": p.pot_part,
                    "equipartition_gap": p.equipartition_gap(),
                    "well_distance": sys.distance_matrix().get(alpha, beta),
                }));
                if let Some(w) = csv.as_mut() {
                    let spacing = p.spacing();
                    for (k, z) in p.samples.iter().enumerate() {
                        let s = -half_width + k as f64 * spacing;
                        let comps: Vec<String> =
                            z.iter().map(|v| format!("{v:.8e}")).collect();
                        writeln!(w, "{alpha},{beta},{eps},{s:.8e},{}", comps.join(","))
                            .map_err(|e| {
                                CliError::Validation(format!("write profiles.csv: {e}"))
                            })?;
                    }
                }
            }
        }
    }
    if let Some(mut w) = csv.take() {
        w.flush()
            .map_err(|e| CliError::Validation(format!("write profiles.csv: {e}")))?;
        ctx.say(&format!("wrote {}", ctx.path("profiles.csv").display()));
    }
    if ctx.config.output.wants(OutputFormat::Json) {
        ctx.write_json("profiles.json", &json!({ "profiles": summaries }))?;
    }
    Ok(())
}

/// Evaluate diffuse and sharp energies of a stored state.
pub fn energy(ctx: &mut RunContext, def_path: &Path, z_path: &Path) -> CliResult<()> {
    let sys = ctx.config.build_system()?;
    let spec = ctx.config.build_spec()?;

    for (label, path) in [("def", def_path), ("z", z_path)] {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("{label} {}: {e}", path.display())))?;
        ctx.add_input(label, &bytes);
    }
    let (def, _) = read_deformation(def_path)?;
    let (z, _) = read_phase(z_path)?;
    if def.grid != z.grid {
        return Err(CliError::Validation(format!(
            "state grids differ: deformation is {}x{}, phase field is {}x{}",
            def.grid.nx, def.grid.ny, z.grid.nx, z.grid.ny
        )));
    }
    if z.h != sys.h() {
        return Err(CliError::Validation(format!(
            "phase field has {} components but the configured system has {}",
            z.h,
            sys.h()
        )));
    }

    // The bulk integrand is +infinity on non-orientation-preserving
    // cells; report the first offender instead of an unhelpful inf.
    for c in 0..def.grid.num_cells() {
        let (i, j) = def.grid.cell_coords(c);
        let det = def.cell_gradient(i, j).det();
        if det <= 0.0 {
            return Err(CliError::Numerical(format!(
                "cell {c}: det(F) = {det:.6e} <= 0, the stored-energy integrand \
                 takes its +infinity branch"
            )));
        }
    }

    let eps = ctx.config.minimize.epsilon;
    let diffuse = diffuse_report(&def, &z, eps, &sys, &spec);
    if !diffuse.is_finite() {
        return Err(CliError::Numerical(
            "diffuse energy is non-finite (stage: diffuse evaluation)".into(),
        ));
    }
    let part = project_to_labels(&z, &sys);
    let sharp = sharp_report(&def, &part, &sys, &spec);
    if !sharp.is_finite() {
        return Err(CliError::Numerical(
            "sharp energy is non-finite (stage: sharp evaluation)".into(),
        ));
    }
    let (lhs, rhs) = liminf_diagnostic(&def, &z, eps, &sys);

    ctx.write_json(
        "energy.json",
        &json!({
            "epsilon": eps,
            "diffuse": diffuse.to_json(),
            "sharp": sharp.to_json(),
            "masses": mass_vector(&def, &z),
            "min_det": def.min_det(),
            "interface_bound": { "lhs": lhs, "rhs": rhs },
        }),
    )?;
    ctx.say(&format!(
        "diffuse total {:.6e}, sharp total {:.6e}",
        diffuse.total, sharp.total
    ));
    Ok(())
}

/// Run the alternating minimization from the configured start.
pub fn minimize(ctx: &RunContext) -> CliResult<()> {
    let sys = ctx.config.build_system()?;
    let spec = ctx.config.build_spec()?;
    let grid = ctx.config.build_grid()?;

    let boundary = ctx.config.boundary.clone();
    let y0 = coons_deformation(grid, |x| boundary.apply(x));
    let mcfg = ctx.config.minimize.to_config();
    let z0 = initial_phase(
        grid,
        &sys,
        &ctx.config.minimize.seed_pattern,
        ctx.config.minimize.noise_amplitude,
        mcfg.seed,
    );
    let state = minimize_eps(&mcfg, &sys, &spec, &y0, &z0)?;
    let last = state.history.last().expect("history is never empty");
    if !last.total.is_finite() {
        return Err(CliError::Numerical(
            "final energy is non-finite (stage: alternating minimization)".into(),
        ));
    }

    if ctx.config.output.wants(OutputFormat::Csv) {
        write_history_csv(&ctx.path("history.csv"), &state.history, &ctx.meta_lines())?;
        ctx.say(&format!("wrote {}", ctx.path("history.csv").display()));
    }
    if ctx.config.output.wants(OutputFormat::Bin) {
        let meta = ctx.meta_json();
        write_deformation(&ctx.path("def.bin"), &state.def, &meta)?;
        write_phase(&ctx.path("z.bin"), &state.z, &meta)?;
        ctx.say(&format!(
            "wrote {} and {}",
            ctx.path("def.bin").display(),
            ctx.path("z.bin").display()
        ));
    }
    if ctx.config.output.wants(OutputFormat::Json) {
        ctx.write_json(
            "report.json",
            &json!({
                "termination": state.termination.to_string(),
                "outer_iterations": state.history.len() - 1,
                "final": last.to_json(),
                "min_det": state.def.min_det(),
                "masses": mass_vector(&state.def, &state.z),
            }),
        )?;
    }
    ctx.say(&format!(
        "{} after {} outer iterations, total {:.6e}",
        state.termination,
        state.history.len() - 1,
        last.total
    ));
    Ok(())
}

/// Sweep the interface thickness under the configured scenario.
pub fn gamma_sweep(ctx: &RunContext) -> CliResult<()> {
    let sys = ctx.config.build_system()?;
    let spec = ctx.config.build_spec()?;
    let grid = ctx.config.build_grid()?;

    let boundary = ctx.config.boundary.clone();
    let mut y0 = coons_deformation(grid, |x| boundary.apply(x));
    let (seed_pattern, noise_amplitude) = match ctx.config.sweep.scenario {
        ScenarioName::StraightInterface => {
            y0.dirichlet.iter_mut().for_each(|d| *d = true);
            (SeedPattern::Stripes { count: 2 }, 0.0)
        }
        ScenarioName::SinglePhase => {
            y0.dirichlet.iter_mut().for_each(|d| *d = true);
            (SeedPattern::Well { index: 0 }, 0.0)
        }
        ScenarioName::TwoPhase => (
            ctx.config.minimize.seed_pattern.clone(),
            ctx.config.minimize.noise_amplitude,
        ),
    };

    let scenario = SweepScenario {
        sys: &sys,
        spec: &spec,
        y0,
        epsilons: ctx.config.sweep.epsilons.clone(),
        seed_pattern,
        noise_amplitude,
        restarts: ctx.config.sweep.restarts,
        minimize: ctx.config.minimize.to_config(),
        base_seed: ctx.config.minimize.seed,
    };
    let rows = run_sweep(&scenario);

    if ctx.config.output.wants(OutputFormat::Csv) {
        write_sweep_csv(&ctx.path("sweep.csv"), &rows, &ctx.meta_lines())?;
        ctx.say(&format!("wrote {}", ctx.path("sweep.csv").display()));
    }
    if ctx.config.output.wants(OutputFormat::Json) {
        let gaps: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                if r.failed {
                    json!(null)
                } else {
                    json!((r.f_eps_recovery - r.f0_sharp).abs() / r.f0_sharp.abs().max(1e-300))
                }
            })
            .collect();
        ctx.write_json(
            "manifest.json",
            &json!({
                "scenario": ctx.config.sweep.scenario,
                "rows": rows,
                "recovery_gap_rel": gaps,
            }),
        )?;
    }
    for r in &rows {
        ctx.say(&format!(
            "epsilon {:.6}: min {:.6e}, recovery {:.6e}, sharp {:.6e}",
            r.epsilon, r.f_eps_min, r.f_eps_recovery, r.f0_sharp
        ));
    }
    if let Some(bad) = rows.iter().find(|r| r.failed) {
        return Err(CliError::Numerical(format!(
            "every restart failed at epsilon {} (stage: sweep minimization)",
            bad.epsilon
        )));
    }
    Ok(())
}
