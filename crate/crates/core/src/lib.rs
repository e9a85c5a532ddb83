//! Petz recovery maps for single-qubit damping channels.
//!
//! The crate builds amplitude- and phase-damping channels, constructs their
//! Petz recovery maps both from the general matrix-function formula and from
//! closed-form Kraus operators, lowers every map to a one-ancilla
//! duality-quantum-computing (DQC) circuit, replays those circuits as
//! idealized three-spin NMR pulse sequences, and sweeps recovery fidelity
//! over channel strength.
//!
//! Conventions used throughout:
//!
//! - tensor products put the most significant factor on the left, and the
//!   system qubit sits left of its ancillas;
//! - channel equality is Choi-matrix Frobenius distance, never a comparison
//!   of Kraus lists;
//! - logarithms are natural.

pub mod channels;
pub mod dqc;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nmr;
pub mod petz;

pub use channels::{ChoiMatrix, KrausChannel, MapKind};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, C64};
