//! One-dimensional transition profiles, their 2-D recovery fields, and
//! the epsilon-sweep harness that measures convergence of the diffuse
//! energies to the sharp limit.

mod profile;
mod recovery;
mod sweep;

pub use profile::{optimal_profile, profile_sample_count, Profile1D};
pub use recovery::{partition_mass, recovery_sequence_2d};
pub use sweep::{
    gamma_sweep, project_to_labels, recovery_convergence_rows, SweepRow, SweepScenario,
};
