//! Simulation and analysis toolkit for simultaneous randomized benchmarking.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`], [`ptm`]: Pauli labels and Pauli transfer matrices.
//! * [`clifford`]: the single-qubit Clifford group and the product groups
//!   `C⊗C`, `C⊗I`, `I⊗C` with multiplication and inverse tables.
//! * [`twirl`]: analytic and brute-force group twirls.
//! * [`noise`]: per-pulse error channels, including the two-qubit cross-talk
//!   Hamiltonian.
//! * [`rb`]: the three benchmarking experiments and survival curves.
//! * [`fit`]: weighted Levenberg-Marquardt fits of exponential decays.
//! * [`report`]: gate errors, addressability metrics and the correlation witness.

pub mod clifford;
pub mod error;
pub mod fit;
pub mod gates;
pub mod noise;
pub mod pauli;
pub mod ptm;
pub mod random;
pub mod rb;
pub mod report;
pub mod twirl;

pub use error::{Error, Result};
