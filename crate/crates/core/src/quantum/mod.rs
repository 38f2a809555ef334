//! Dense density-matrix simulation on a finite tensor product of qudit
//! registers: construction, unitaries, projective measurement, partial
//! trace, fidelity, generalized teleportation and CHSH evaluation.
//!
//! Registers are ordered; the first register is the most significant digit
//! of the computational-basis index.

mod chsh;
pub mod gates;
mod measure;
mod state;
mod system;
mod teleport;

pub use chsh::{chsh_value, BinaryMeasurement, ChshStrategy};
pub use measure::{Measurement, MeasurementOutcome};
pub use state::{fidelity, QuantumState, StateSpec};
pub use system::RegisterSystem;
pub use teleport::{bell_basis, teleport_branches, teleport_receive, teleport_send, TeleportMessage};

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for validating freshly constructed objects.
pub const CONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance for quantities propagated through several operations.
pub const PROPAGATED_TOL: f64 = 1e-9;
/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("register dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("total dimension {total} exceeds cap {cap}")]
    DimensionCap { total: usize, cap: usize },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register `{0}`")]
    DuplicateRegister(String),
    #[error("vector is not normalizable")]
    NotNormalizable,
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("projectors do not sum to the identity")]
    IncompleteMeasurement,
    #[error("malformed measurement: {0}")]
    MalformedMeasurement(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("teleport message ({shift}, {phase}) out of range for dimension {dim}")]
    MessageOutOfRange { shift: usize, phase: usize, dim: usize },
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Is `u` unitary within `tol` (max-entry deviation of `u†u` from `I`)?
pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    if !u.is_square() {
        return false;
    }
    let prod = u.adjoint() * u;
    let n = u.nrows();
    (0..n).all(|i| (0..n).all(|j| {
        let target = if i == j { 1.0 } else { 0.0 };
        (prod[(i, j)] - c(target, 0.0)).norm() <= tol
    }))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
