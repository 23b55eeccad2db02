//! Majorization reachability for unital Lindblad control systems whose single
//! normal noise term can be switched on and off.
//!
//! The crate decides `ρ ≺ ρ₀`, synthesizes explicit channel schedules that
//! steer `ρ₀` to any majorized target within a trace-norm budget, and ships
//! the supporting machinery (Schur–Horn construction, C-numerical ranges,
//! closed-form noise propagation, Trotter splitting, Lie-rank tests) as
//! independently usable pieces.

pub mod cli;
pub mod controllability;
pub mod crange;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lindblad;
pub mod majorization;
pub mod random;
pub mod synthesis;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianEig, PointSet2D, C64};
pub use majorization::{DensityMatrix, EigenvalueSequence, PaddedPair};
