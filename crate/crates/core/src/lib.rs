//! Anisotropic Ginzburg-Landau model on the flat 2-torus.
//!
//! The crate evaluates Finsler norms `F(x,y)` and their convex duals via the
//! Legendre map, builds the two canonical volume densities (Busemann-Hausdorff
//! and Holmes-Thompson), assembles the gauge-coupled GL energy
//!
//! ```text
//! G[ψ,A] = ∫ ( ½‖(d − iA)ψ‖²_{F*} + (1/2λ)|dA|² + (1/4ε²)(1−|ψ|²)² ) σ dθ dφ
//! ```
//!
//! on a periodic grid, minimizes it in Coulomb gauge by line-searched descent,
//! and analyzes the vortex content of the minimizers (winding numbers,
//! Jacobian density, sharp-interface length functionals).
//!
//! All state is value-semantic and all randomness is seeded, so identical
//! inputs reproduce identical outputs bit for bit.

pub mod checks;
pub mod energy;
pub mod grid;
pub mod io;
pub mod measure;
pub mod norm;
pub mod numeric;
pub mod ops;
pub mod solver;
pub mod vortex;

pub use energy::{EnergyBreakdown, GlGradient, GlParams};
pub use grid::{Field, GaugeFunction, OneForm, PeriodicGrid, RealField, ScalarField};
pub use measure::{MeasureDensity, MeasureKind};
pub use norm::{Coefficient, CotangentVector, FinslerNorm, TangentVector, TorusPoint};
pub use solver::{
    GridSchedule, Sector, SolverConfig, SolverTrace, StepRule, SweepRow, TerminationReason,
};
pub use vortex::{PolylineCurrent, Vortex, VortexSet};

/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Norm parameters violate the structure axioms (nonpositive
    /// coefficients, drift too large, ...). Detected at construction.
    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    /// A scalar argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// An iterative kernel (Newton inverse, conjugate gradient) failed to
    /// reach its tolerance.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    IterativeFailure {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// A run configuration is inconsistent (bad grid size, empty sweep,
    /// under-resolved cores, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A binary or CSV artifact does not parse.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
