//! Phase-field and sharp-interface energies for multiphase hyperelastic
//! solids on structured 2-D grids.
//!
//! The crate models a deformable body occupying a rectangle, carrying a
//! vector phase field that mixes `h + 1` material phases. The total
//! energy couples a frame-indifferent bulk stored energy with an
//! interfacial term, either diffuse (gradient-squared plus a multi-well
//! potential at thickness `epsilon`) or sharp (geodesic well distances
//! weighting the deformed interface area). The modules follow that
//! split:
//!
//! - [`phases`]: multi-well potentials and geodesic well distances;
//! - [`fields`]: the structured grid, deformations, and per-cell calculus;
//! - [`stored_energy`]: the bulk density `W(F, z)` and its derivatives;
//! - [`interfacial`]: interfacial measures carried by a deformation;
//! - [`energy`]: assembled diffuse and sharp totals;
//! - [`optimize`]: block-alternating projected descent in `(y, z)`;
//! - [`mm1d`]: 1-D connecting profiles and recovery sequences;
//! - [`io`]: binary field containers and CSV report helpers.
//!
//! Commonly used types are re-exported at the crate root.

pub mod energy;
pub mod error;
pub mod fields;
pub mod interfacial;
pub mod io;
pub mod math;
pub mod mm1d;
pub mod optimize;
pub mod params;
pub mod phases;
pub mod stored_energy;

/// The deterministic RNG used by every seeded sweep in the crate.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub use energy::{
    bulk_energy, diffuse_report, interface_energy_diffuse, interface_energy_sharp,
    liminf_diagnostic, mass_vector, sharp_report, EnergyReport, EpsilonTag,
};
pub use error::{Error, Result};
pub use fields::{
    ciarlet_necas_residual, det_cof, distortion, piola_residual, CellScalarField,
    CiarletNecasReport, DeformationField, Grid, NodeVectorField, PhaseField, TensorCellField,
};
pub use interfacial::{
    deformed_perimeter, interfacial_measure, mollify, pushforward_equality_check, total_variation,
    InterfaceAreas, PhasePartition, PushforwardReport, Rect, VectorMeasure,
};
pub use io::{
    open_csv, read_csv_table, read_deformation, read_phase, write_deformation,
    write_distance_csv, write_history_csv, write_measure_csv, write_phase, write_sweep_csv,
};
pub use math::{Mat2, Vec2};
pub use mm1d::{
    gamma_sweep, optimal_profile, partition_mass, profile_sample_count, project_to_labels,
    recovery_convergence_rows, recovery_sequence_2d, Profile1D, SweepRow, SweepScenario,
};
pub use optimize::{
    assemble_gradients, coons_deformation, initial_phase, minimize_eps, objective_value,
    project_phase, safeguarded_step_y, MinimizeConfig, MinimizerState, SeedPattern,
    TerminationReason,
};
pub use phases::{
    check_triangle, DistanceMatrix, Geodesic, PhaseSystem, Potential, TriangleViolation,
    WellDistanceField,
};
pub use stored_energy::{PhaseElasticParams, StoredEnergyParams, StoredEnergySpec};
