//! Complex-matrix primitives, operator bases, state parameterization and
//! fidelity-family metrics.

pub(crate) mod basis;
pub mod linalg;
mod metrics;
mod projection;
mod state;

pub use basis::{build_pauli_basis, HermitianBasis, PauliLabel};
pub use linalg::CMatrix;
pub use metrics::{bures_distance_sq, fidelity, infidelity, purity};
pub use projection::{project_to_physical, project_to_simplex};
pub use state::{bloch_to_matrix, state_to_bloch, BlochVector, DensityMatrix, MatrixJson};

/// Tolerance for Hermiticity checks on matrices entering the projection.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Density-matrix invariants are validated to this tolerance.
pub const STATE_TOL: f64 = 1e-10;
