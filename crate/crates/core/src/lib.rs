//! Variational quantum eigensolver toolkit for small molecular systems.
//!
//! The pipeline runs from FCIDUMP-style integrals through an active-space
//! reduction to a second-quantized Hamiltonian ([`hamiltonian`]), maps it to
//! qubits with Jordan-Wigner, parity or Bravyi-Kitaev ([`encoding`]), prepares
//! UCCSD or k-UpCCGSD trial states ([`ansatz`]) and minimizes their energy on a
//! state-vector or density-matrix simulator ([`simulator`], [`vqe`]). An exact
//! diagonalization oracle ([`fci`]) provides the reference energies, and
//! [`pes`] sweeps a set of geometries into relative-energy curves.

pub mod ansatz;
pub mod encoding;
pub mod error;
pub mod fci;
pub mod fermion;
pub mod hamiltonian;
pub mod pauli;
pub mod pes;
pub mod simulator;
pub mod units;
pub mod vqe;

pub use error::{Error, Result};
