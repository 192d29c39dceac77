//! The experiment configuration: one JSON document with a section per
//! concern, strict about unknown keys, and fully defaulted so that an
//! absent file means "the stock double-well experiment".

use elastophase_core::fields::Grid;
use elastophase_core::math::Vec2;
use elastophase_core::optimize::{MinimizeConfig, SeedPattern};
use elastophase_core::phases::{PhaseSystem, Potential};
use elastophase_core::stored_energy::{StoredEnergyParams, StoredEnergySpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub phases: PhasesSection,
    pub stored_energy: StoredEnergyParams,
    pub grid: GridSection,
    pub boundary: BoundarySection,
    pub minimize: MinimizeSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhasesSection {
    pub potential: Potential,
    /// Box radius `R` of the admissible phase values.
    pub box_radius: f64,
    /// Lattice points per axis for the geodesic solver; absent means
    /// the solver default.
    pub lattice_points: Option<usize>,
}

impl Default for PhasesSection {
    fn default() -> Self {
        PhasesSection {
            potential: Potential::default_double_well(),
            box_radius: 2.0,
            lattice_points: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            nx: 64,
            ny: 64,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

/// The Dirichlet boundary family `y_0`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySection {
    #[default]
    Identity,
    /// `y_0(x) = M x`, row-major and orientation-preserving.
    Affine { matrix: [[f64; 2]; 2] },
    /// Simple shear `y_0(x) = (x_1 + amount x_2, x_2)`.
    Shear { amount: f64 },
}

impl BoundarySection {
    pub fn apply(&self, x: Vec2) -> Vec2 {
        match self {
            BoundarySection::Identity => x,
            BoundarySection::Affine { matrix: m } => Vec2::new(
                m[0][0] * x.x + m[0][1] * x.y,
                m[1][0] * x.x + m[1][1] * x.y,
            ),
            BoundarySection::Shear { amount } => Vec2::new(x.x + amount * x.y, x.y),
        }
    }
}

/// Mirrors [`MinimizeConfig`] field-for-field, plus the initialization
/// choices (seed layout and noise amplitude).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeSection {
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub inner_iters_y: usize,
    pub inner_iters_z: usize,
    pub step_y: f64,
    pub step_z: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub det_floor: f64,
    pub tol: f64,
    pub mass_penalty_weight: f64,
    pub target_masses: Option<Vec<f64>>,
    pub seed: u64,
    pub seed_pattern: SeedPattern,
    pub noise_amplitude: f64,
}

impl Default for MinimizeSection {
    fn default() -> Self {
        let c = MinimizeConfig::default();
        MinimizeSection {
            epsilon: c.epsilon,
            max_outer_iters: c.max_outer_iters,
            inner_iters_y: c.inner_iters_y,
            inner_iters_z: c.inner_iters_z,
            step_y: c.step_y,
            step_z: c.step_z,
            backtrack: c.backtrack,
            armijo: c.armijo,
            det_floor: c.det_floor,
            tol: c.tol,
            mass_penalty_weight: c.mass_penalty_weight,
            target_masses: c.target_masses,
            seed: c.seed,
            seed_pattern: SeedPattern::Stripes { count: 2 },
            noise_amplitude: 0.05,
        }
    }
}

impl MinimizeSection {
    pub fn to_config(&self) -> MinimizeConfig {
        MinimizeConfig {
            epsilon: self.epsilon,
            max_outer_iters: self.max_outer_iters,
            inner_iters_y: self.inner_iters_y,
            inner_iters_z: self.inner_iters_z,
            step_y: self.step_y,
            step_z: self.step_z,
            backtrack: self.backtrack,
            armijo: self.armijo,
            det_floor: self.det_floor,
            tol: self.tol,
            mass_penalty_weight: self.mass_penalty_weight,
            target_masses: self.target_masses.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    /// Frozen geometry, one vertical interface, no seed noise.
    StraightInterface,
    /// Frozen geometry, a single well everywhere.
    SinglePhase,
    /// Free elastic relaxation with the configured seed and noise.
    TwoPhase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Decreasing interface thicknesses.
    pub epsilons: Vec<f64>,
    pub scenario: ScenarioName,
    pub restarts: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            epsilons: vec![0.125, 0.0625],
            scenario: ScenarioName::StraightInterface,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "out".to_string(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Bin],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

impl ExperimentConfig {
    /// Parse and validate a config file; returns the raw bytes too so
    /// callers can hash exactly what was read.
    pub fn from_file(path: &std::path::Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        // serde_json's message already ends in "at line L column C".
        let cfg: ExperimentConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok((cfg, bytes))
    }

    /// Field-level checks that the type system cannot express.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if !(self.phases.box_radius.is_finite() && self.phases.box_radius > 0.0) {
            return bad(format!("phases.box_radius = {}", self.phases.box_radius));
        }
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return bad(format!("grid {}x{} has no cells", self.grid.nx, self.grid.ny));
        }
        if !(self.grid.lx > 0.0 && self.grid.ly > 0.0) {
            return bad(format!(
                "grid extents must be positive: lx = {}, ly = {}",
                self.grid.lx, self.grid.ly
            ));
        }
        if let BoundarySection::Affine { matrix: m } = &self.boundary {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if !(det > 0.0) {
                return bad(format!("boundary.matrix must have det > 0, got {det}"));
            }
        }
        self.minimize.to_config().validate().map_err(CliError::from)?;
        if !(self.minimize.noise_amplitude >= 0.0 && self.minimize.noise_amplitude.is_finite()) {
            return bad(format!(
                "minimize.noise_amplitude = {}",
                self.minimize.noise_amplitude
            ));
        }
        if self.sweep.epsilons.is_empty() {
            return bad("sweep.epsilons is empty".into());
        }
        for w in self.sweep.epsilons.windows(2) {
            if !(w[1] < w[0]) {
                return bad(format!(
                    "sweep.epsilons must decrease strictly, got {} then {}",
                    w[0], w[1]
                ));
            }
        }
        if !self.sweep.epsilons.iter().all(|e| e.is_finite() && *e > 0.0) {
            return bad(format!("sweep.epsilons {:?}", self.sweep.epsilons));
        }
        if self.sweep.restarts == 0 {
            return bad("sweep.restarts must be at least 1".into());
        }
        Ok(())
    }

    pub fn build_system(&self) -> CliResult<PhaseSystem> {
        let sys = match self.phases.lattice_points {
            Some(n) => {
                PhaseSystem::new(self.phases.potential.clone(), self.phases.box_radius, n)
            }
            None => PhaseSystem::with_default_lattice(
                self.phases.potential.clone(),
                self.phases.box_radius,
            ),
        }?;
        Ok(sys)
    }

    pub fn build_spec(&self) -> CliResult<StoredEnergySpec> {
        let spec = StoredEnergySpec::from_params(&self.stored_energy)?;
        let h = self.phases.potential.dim();
        if spec.num_phases() != h + 1 {
            return Err(CliError::Validation(format!(
                "stored_energy.phases has {} entries but the potential has phase dimension {h} (need {})",
                spec.num_phases(),
                h + 1
            )));
        }
        Ok(spec)
    }

    pub fn build_grid(&self) -> CliResult<Grid> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly).map_err(CliError::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back.grid.nx, 64);
    }

    #[test]
    fn unknown_keys_are_rejected_per_section() {
        for doc in [
            r#"{"zzz": 1}"#,
            r#"{"grid": {"nx": 8, "zzz": 1}}"#,
            r#"{"minimize": {"zzz": 1}}"#,
            r#"{"phases": {"potential": {"family": "double-well", "zzz": 1}}}"#,
        ] {
            let err = serde_json::from_str::<ExperimentConfig>(doc).unwrap_err();
            assert!(err.to_string().contains("zzz"), "{err}");
        }
    }

    #[test]
    fn potential_families_parse() {
        let doc = r#"{"phases": {"potential": {"family": "product-of-squared-distances",
            "wells": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]}, "box_radius": 2.0}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(doc).unwrap();
        assert_eq!(cfg.phases.potential.dim(), 2);

        let doc = r#"{"phases": {"potential": {"family": "perturbed-quadratic-wells",
            "wells": [[-1.0], [1.0]], "amplitude": 0.3, "center": [0.5]}}}"#;
        let cfg: ExperimentConfig = serde_json::from_str(doc).unwrap();
        assert_eq!(cfg.phases.potential.dim(), 1);
    }

    #[test]
    fn boundary_families_apply() {
        let b: BoundarySection =
            serde_json::from_str(r#"{"kind": "shear", "amount": 0.5}"#).unwrap();
        let y = b.apply(Vec2::new(1.0, 2.0));
        assert_eq!((y.x, y.y), (2.0, 2.0));
        let b: BoundarySection =
            serde_json::from_str(r#"{"kind": "affine", "matrix": [[2.0, 0.0], [0.0, 1.0]]}"#)
                .unwrap();
        let y = b.apply(Vec2::new(1.0, 3.0));
        assert_eq!((y.x, y.y), (2.0, 3.0));
    }

    #[test]
    fn bad_values_are_named_in_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep.epsilons = vec![0.1, 0.2];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("sweep.epsilons"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.boundary = BoundarySection::Affine {
            matrix: [[1.0, 0.0], [0.0, -1.0]],
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("det"), "{err}");
    }
}
