//! Shared fixtures for the criterion benches: representative systems
//! and smooth states at the sizes the experiments actually run.

use elastophase_core::{
    CellScalarField, DeformationField, Grid, PhaseField, PhaseSystem, Potential,
    StoredEnergyParams, StoredEnergySpec, Vec2,
};

pub fn double_well_system() -> PhaseSystem {
    PhaseSystem::with_default_lattice(Potential::default_double_well(), 2.0)
        .expect("valid system")
}

pub fn planar_system() -> PhaseSystem {
    PhaseSystem::with_default_lattice(
        Potential::product_wells(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]),
        2.0,
    )
    .expect("valid system")
}

pub fn default_spec() -> StoredEnergySpec {
    StoredEnergySpec::from_params(&StoredEnergyParams::default()).expect("valid spec")
}

/// A smooth, orientation-preserving deformation with a diffuse
/// two-phase state on an `n` by `n` grid.
pub fn smooth_state(n: usize) -> (DeformationField, PhaseField) {
    let grid = Grid::new(n, n, 1.0, 1.0).expect("valid grid");
    let def = DeformationField::from_map(grid, |p| {
        Vec2::new(
            p.x + 0.05 * (3.0 * p.y).sin() * p.x * (1.0 - p.x),
            p.y + 0.04 * (2.0 * p.x).cos() * p.y * (1.0 - p.y),
        )
    });
    let z = PhaseField::from_fn(grid, 1, |p, out| {
        out[0] = ((p.x - 0.5) / 0.08).tanh() + 0.05 * (7.0 * p.y).sin();
    });
    (def, z)
}

/// Indicator of a centered square, the interfacial-measure workload.
pub fn square_indicator(n: usize) -> (DeformationField, CellScalarField) {
    let grid = Grid::new(n, n, 1.0, 1.0).expect("valid grid");
    let def = DeformationField::from_map(grid, |p| {
        Vec2::new(2.0 * p.x + 0.1 * p.y, p.y + 0.05 * (3.0 * p.x).sin())
    });
    let g = CellScalarField::from_fn(grid, |p| {
        f64::from(p.x > 0.25 && p.x < 0.75 && p.y > 0.25 && p.y < 0.75)
    });
    (def, g)
}
