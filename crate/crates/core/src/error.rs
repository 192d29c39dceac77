//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input contained NaN or infinity where a finite value is required.
    #[error("non-finite input in {context}")]
    NonFinite { context: &'static str },

    /// Geodesic lattices are only built for phase dimensions 1..=3.
    #[error("phase dimension h = {h} unsupported (lattice search requires h <= 3)")]
    UnsupportedDimension { h: usize },

    /// A point lies outside the phase box `[-R, R]^h`.
    #[error("phase value outside box of radius {radius}: |z| = {norm}")]
    OutsideBox { radius: f64, norm: f64 },

    /// Construction-time validation of a potential or system failed.
    #[error("invalid phase system: {0}")]
    InvalidSystem(String),

    /// Construction-time validation of a stored-energy specification failed.
    #[error("invalid stored energy: {0}")]
    InvalidEnergy(String),

    /// Mismatched grids, component counts, or vector lengths.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An evaluation produced NaN, which indicates a bug or an
    /// out-of-domain state that was not caught earlier.
    #[error("NaN produced during {stage}")]
    NumericalFailure { stage: &'static str },

    /// Binary field container I/O and format errors.
    #[error("field container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
