//! Numerical parameters pinned in one place.
//!
//! Anything that affects reproducibility of reported numbers lives here,
//! not scattered through the call sites. Tests and the acceptance suite
//! rely on these exact values; change them only together with the
//! recorded expectations.

/// Lattice points per axis for geodesic searches over the phase box.
pub const DEFAULT_LATTICE_POINTS: usize = 201;

/// Node count of the refined geodesic polyline.
pub const REFINE_NODES: usize = 128;

/// Maximum projected-gradient iterations when refining a geodesic path.
pub const REFINE_MAX_ITERS: usize = 200;

/// Relative-improvement threshold that stops path refinement early.
pub const REFINE_REL_TOL: f64 = 1e-8;

/// Armijo sufficient-decrease constant shared by all line searches.
pub const ARMIJO_C: f64 = 1e-4;

/// Backtracking factor shared by all line searches.
pub const BACKTRACK: f64 = 0.5;

/// Maximum halvings before a line search reports failure.
pub const MAX_BACKTRACKS: usize = 40;

/// Determinant threshold below which the distortion coefficient is
/// reported as 1 instead of dividing by a vanishing Jacobian.
pub const DISTORTION_DET_FLOOR: f64 = 1e-12;

/// Denominator guard for weight gradients near potential wells.
pub const WEIGHT_GUARD: f64 = 1e-9;

/// Default fraction of the current minimum cell determinant that a
/// deformation trial step must preserve.
pub const DET_FLOOR_FRACTION: f64 = 0.1;

/// Gauss-Seidel sweep cap for the 1-D connecting-profile solver.
pub const PROFILE_MAX_SWEEPS: usize = 400;

/// Relative-improvement threshold that stops profile sweeps.
pub const PROFILE_REL_TOL: f64 = 1e-12;

/// Transition half-width, in units of epsilon, beyond which recovery
/// fields are clamped to the pure wells.
pub const RECOVERY_CLAMP_WIDTHS: f64 = 5.0;
