//! Self-contained consistency checks: re-derive the identities the
//! model is built on and report the measured margin of each. The checks
//! are fixed — they do not depend on the experiment configuration — so
//! `verify` means the same thing in every run.

use elastophase_core::fields::bump_test_function;
use elastophase_core::{
    check_triangle, coons_deformation, initial_phase, interface_energy_sharp, liminf_diagnostic,
    minimize_eps, optimal_profile, piola_residual, profile_sample_count,
    pushforward_equality_check, CellScalarField, DeformationField, Grid, Mat2, MinimizeConfig,
    PhaseField, PhasePartition, PhaseSystem, Potential, SeedPattern, StoredEnergyParams,
    StoredEnergySpec, Vec2,
};
use rand::Rng;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::RunContext;

struct Check {
    name: &'static str,
    measured: f64,
    bound: f64,
    /// `true` when the measurement must stay at or below the bound,
    /// `false` when it must reach at least the bound.
    upper: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, bound: f64) -> Self {
        Check {
            name,
            measured,
            bound,
            upper: true,
        }
    }

    fn at_least(name: &'static str, measured: f64, bound: f64) -> Self {
        Check {
            name,
            measured,
            bound,
            upper: false,
        }
    }

    fn pass(&self) -> bool {
        if !self.measured.is_finite() {
            return false;
        }
        if self.upper {
            self.measured <= self.bound
        } else {
            self.measured >= self.bound
        }
    }
}

pub fn verify(ctx: &RunContext) -> CliResult<()> {
    let mut checks = Vec::new();

    let dw = PhaseSystem::with_default_lattice(Potential::default_double_well(), 2.0)?;
    let exact = 4.0 * 2.0_f64.sqrt() / 3.0;
    let d12 = dw.distance_matrix().get(0, 1);
    checks.push(Check::at_most(
        "well-distance-closed-form",
        (d12 - exact).abs(),
        1e-3,
    ));

    // Triangle inequality across all three potential families.
    let planar = PhaseSystem::with_default_lattice(
        Potential::product_wells(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ]),
        2.0,
    )?;
    let perturbed = PhaseSystem::with_default_lattice(
        Potential::PerturbedWells {
            wells: vec![vec![-1.0], vec![1.0]],
            amplitude: 0.3,
            center: vec![0.3],
        },
        2.0,
    )?;
    for (name, sys) in [
        ("triangle-double-well", &dw),
        ("triangle-planar-wells", &planar),
        ("triangle-perturbed-wells", &perturbed),
    ] {
        let violations = check_triangle(sys.distance_matrix(), 1e-6);
        checks.push(Check::at_most(name, violations.len() as f64, 0.0));
    }

    // Transition profiles: lower bound, pinned bracket, equipartition.
    let p = optimal_profile(&dw, 0, 1, 0.05, 1.0, profile_sample_count(0.05, 1.0))?;
    checks.push(Check::at_most("profile-lower-bound", exact - p.energy, 1e-6));
    checks.push(Check::at_most("profile-energy-bracket", p.energy, 1.90));
    let p = optimal_profile(&dw, 0, 1, 0.025, 1.0, profile_sample_count(0.025, 1.0))?;
    checks.push(Check::at_most(
        "profile-equipartition",
        p.equipartition_gap(),
        0.02,
    ));

    // Discrete cofactor divergence: exact on affine maps, second order
    // on smooth ones.
    let g = Grid::new(24, 24, 1.0, 1.0)?;
    let affine =
        DeformationField::affine(g, Mat2::new(1.7, 0.3, -0.4, 1.1), Vec2::new(0.2, 0.1));
    checks.push(Check::at_most(
        "piola-affine",
        piola_residual(&affine, bump_test_function(g)).abs(),
        1e-10,
    ));
    let smooth = |p: Vec2| {
        Vec2::new(
            p.x + 0.1 * (2.0 * p.x + p.y).sin(),
            p.y + 0.08 * (p.x - 1.5 * p.y).cos(),
        )
    };
    let mut residuals = Vec::new();
    for n in [16usize, 32, 64] {
        let g = Grid::new(n, n, 1.0, 1.0)?;
        let def = DeformationField::from_map(g, smooth);
        residuals.push(piola_residual(&def, bump_test_function(g)).abs());
    }
    let order = (residuals[0] / residuals[1])
        .log2()
        .min((residuals[1] / residuals[2]).log2());
    checks.push(Check::at_least("piola-order", order, 1.9));

    // Pointwise interface lower bound on random smooth states.
    let g = Grid::new(24, 24, 1.0, 1.0)?;
    let def = DeformationField::identity(g);
    let mut rng = elastophase_core::rng(7);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (a1, a2, a3) = (
            rng.random_range(-1.3..1.3),
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.5..0.5),
        );
        let (p1, p2) = (
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let z = PhaseField::from_fn(g, 1, |p, out| {
            let x = std::f64::consts::TAU * p.x;
            let y = std::f64::consts::TAU * p.y;
            out[0] = a1 * (x + p1).sin() + a2 * (2.0 * y + p2).cos() + a3 * (x + y).sin();
        });
        let (lhs, rhs) = liminf_diagnostic(&def, &z, 0.1, &dw);
        worst = worst.max(rhs - lhs);
    }
    checks.push(Check::at_most("interface-lower-bound", worst, 1e-8));

    // Rotating the deformation gradient must not change the energy.
    // The identity is exact in real arithmetic; what the check measures
    // is rounding noise, which scales with the largest W drawn (up to
    // ~1e5 when det(F) sits near its sampling floor).
    let spec = StoredEnergySpec::from_params(&StoredEnergyParams::default())?;
    checks.push(Check::at_most(
        "frame-indifference",
        spec.frame_indifference_check(1000, 42),
        1e-10,
    ));

    // Interfacial measure against the directly mapped boundary length.
    let g = Grid::new(128, 128, 1.0, 1.0)?;
    let def = DeformationField::affine(g, Mat2::diag(2.0, 1.0), Vec2::ZERO);
    let square = CellScalarField::from_fn(g, |p| {
        f64::from(p.x > 0.25 && p.x < 0.75 && p.y > 0.25 && p.y < 0.75)
    });
    let rep = pushforward_equality_check(&def, &square);
    checks.push(Check::at_most(
        "pushforward-duality",
        rep.gap.abs() / rep.direct_area,
        0.02,
    ));

    // Sharp energy of a straight interface equals distance times
    // deformed length exactly.
    let g = Grid::new(64, 64, 1.0, 1.0)?;
    let id = DeformationField::identity(g);
    let vertical = PhasePartition::from_fn(g, 2, |p| usize::from(p.x > 0.5))?;
    checks.push(Check::at_most(
        "sharp-interface-vertical",
        (interface_energy_sharp(&id, &vertical, dw.distance_matrix()) - d12 * g.ly).abs(),
        1e-9,
    ));
    let stretched = DeformationField::affine(g, Mat2::diag(1.0, 3.0), Vec2::ZERO);
    let horizontal = PhasePartition::from_fn(g, 2, |p| usize::from(p.y > 0.5))?;
    checks.push(Check::at_most(
        "sharp-interface-horizontal",
        (interface_energy_sharp(&stretched, &horizontal, dw.distance_matrix()) - d12 * g.lx).abs(),
        1e-9,
    ));

    // State containers must round-trip bit-exactly.
    let g = Grid::new(9, 7, 1.3, 0.8)?;
    let def = DeformationField::from_map(g, |p| {
        Vec2::new(p.x + 0.031 * (5.0 * p.y).sin(), p.y - 0.017 * (3.0 * p.x).cos())
    });
    let scratch = ctx.path("roundtrip.bin");
    elastophase_core::write_deformation(&scratch, &def, "{}")?;
    let (back, _) = elastophase_core::read_deformation(&scratch)?;
    let _ = std::fs::remove_file(&scratch);
    let max_diff = def
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a.x - b.x).abs().max((a.y - b.y).abs()))
        .fold(0.0_f64, f64::max);
    checks.push(Check::at_most("container-round-trip", max_diff, 0.0));

    // A short minimization run must descend and stay injective.
    let g = Grid::new(16, 16, 1.0, 1.0)?;
    let y0 = coons_deformation(g, |x| x);
    let cfg = MinimizeConfig {
        epsilon: 0.15,
        max_outer_iters: 25,
        seed: 5,
        ..MinimizeConfig::default()
    };
    let z0 = initial_phase(g, &dw, &SeedPattern::Stripes { count: 2 }, 0.05, cfg.seed);
    let state = minimize_eps(&cfg, &dw, &spec, &y0, &z0)?;
    let max_rise = state
        .history
        .windows(2)
        .map(|w| w[1].total - w[0].total)
        .fold(0.0_f64, f64::max);
    checks.push(Check::at_most("optimizer-monotone", max_rise, 1e-9));
    checks.push(Check::at_least(
        "optimizer-injective",
        state.def.min_det(),
        1e-12,
    ));

    let mut failed = 0;
    for c in &checks {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        let rel = if c.upper { "<=" } else { ">=" };
        println!(
            "{verdict} {} measured={:.6e} (need {rel} {:.1e})",
            c.name, c.measured, c.bound
        );
        if !c.pass() {
            failed += 1;
        }
    }

    let entries: Vec<serde_json::Value> = checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "measured": c.measured,
                "bound": c.bound,
                "direction": if c.upper { "at-most" } else { "at-least" },
                "pass": c.pass(),
            })
        })
        .collect();
    ctx.write_json(
        "verify.json",
        &json!({
            "checks": entries,
            "total": checks.len(),
            "failed": failed,
        }),
    )?;

    if failed > 0 {
        return Err(CliError::Numerical(format!(
            "{failed} of {} verification checks failed",
            checks.len()
        )));
    }
    Ok(())
}
