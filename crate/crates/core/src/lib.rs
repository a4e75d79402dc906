//! Classical and quantum subspace eigensolvers for second-quantized molecular
//! Hamiltonians.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! - [`integrals`]: spin-free one- and two-electron integrals, frozen-core
//!   active spaces and pivoted Cholesky factorization of the ERI tensor.
//! - [`fock`]: the exact many-electron engine (Slater–Condon Hamiltonian
//!   application, full CI, exact real/imaginary-time propagation). Every
//!   other module is validated against it.
//! - [`qubits`]: Pauli algebra, the Jordan–Wigner mapping and commuting-group
//!   partitioning.
//! - [`engine`]: dense statevector simulation, orbital-rotation networks and
//!   low-rank first-order Trotter steps.
//! - [`geev`]: the thresholded generalized eigensolver shared by all subspace
//!   methods, plus conditioning and perturbation diagnostics.
//! - [`classical`]: power Krylov, Lanczos, Davidson and Krylov convergence
//!   bounds.
//! - [`quantum`]: QSE/MRCISD, qEOM, QFD, QLanczos/QITE, Chebyshev and
//!   Gaussian-power Krylov, response functions and fast-forwarding.
//! - [`shots`]: the finite-sampling measurement model.
//!
//! Energies are in hartree everywhere.

#![no_std]

extern crate alloc;

pub mod classical;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod fock;
pub mod geev;
pub mod integrals;
pub mod linalg;
pub mod quantum;
pub mod qubits;
pub mod shots;

pub use error::{Error, Result};
pub use linalg::C64;
