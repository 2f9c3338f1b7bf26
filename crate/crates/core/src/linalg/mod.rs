//! Shared linear-algebra kernels: symmetric sparse storage, a skyline
//! Cholesky factorization, a dense symmetric eigensolver, and a deflated
//! MINRES for the singular symmetric systems behind the first-order
//! correctors.

mod dense;
mod minres;
mod rng;
mod skyline;
mod sparse;

pub use dense::{sym_eigen, sym_tridiag_eigen, DenseMat};
pub use minres::minres_deflated;
pub use rng::{splitmix64, symmetric_unit, unit_vector};
pub use skyline::SkylineChol;
pub use sparse::{SparseSym, SymBuilder};
