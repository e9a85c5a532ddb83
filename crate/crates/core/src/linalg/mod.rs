//! Dense complex linear algebra for qubit-sized operators.

mod eig;
mod matrix;
pub mod random;
mod state;

pub use eig::{
    complete_unitary, herm_eig, psd_inv_sqrt, psd_inv_sqrt_with_rank, psd_sqrt, EigDecomposition,
    HERMITIAN_TOL, PSD_CLAMP, RANK_TOL,
};
pub use matrix::{pauli, ComplexMatrix, C64, I, ONE, ZERO};
pub use state::{fidelity, partial_trace, reduce, relative_entropy, tensor, DensityMatrix, STATE_TOL};
