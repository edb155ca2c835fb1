pub mod checks;
pub mod cutoff;
pub mod norms;
pub mod operator;
pub mod sweep;

pub use cutoff::{CutoffSpec, Profile};
pub use norms::{l2_norm, lp_duality_check, lp_norm_estimate, LpEstimate, NormEstimate};
pub use operator::{DiscretizedOperator, Sign, DEFAULT_GRID_BUDGET};
pub use sweep::{sweep, Sample, SampleStatus, SweepConfig, SweepResult};

use crate::puiseux::InverseError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("frequency must be finite and nonzero, got {0}")]
    InvalidFrequency(f64),
    #[error("cutoff half-width must be positive, got {0}")]
    InvalidCutoff(f64),
    #[error("exponent out of range: {0}")]
    InvalidExponent(f64),
    #[error("grid of {nodes}² nodes at λ = {lambda} exceeds the budget of {budget} entries (largest λ that fits: {lambda_cap})")]
    GridBudgetExceeded {
        lambda: f64,
        nodes: usize,
        budget: usize,
        lambda_cap: f64,
    },
    #[error("damped weight is infinite at ({x}, {y})")]
    SingularWeight { x: f64, y: f64 },
    #[error("dyadic piece ({j}, {k}) meets no grid point")]
    EmptyPiece { j: i32, k: i32 },
    #[error("|S''| ranges over [{min}, {max}], outside the window [{}, {}]", window.0, window.1)]
    HessianOutOfWindow { min: f64, max: f64, window: (f64, f64) },
    #[error("slice integral diverges at y = {y}")]
    DivergentSliceIntegral { y: f64 },
    #[error("check needs the plain damping factor")]
    NotPlainDamping,
    #[error("check needs the modified damping factor")]
    NotModifiedDamping,
    #[error("no non-degenerate atom interval found at λ = {lambda}")]
    NoValidAtom { lambda: f64 },
    #[error(transparent)]
    Inverse(#[from] InverseError),
}

/// Shortest round-tripping rendering with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
