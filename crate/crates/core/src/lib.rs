//! Spectra of smooth planar domains with boundary-concentrated mass.
//!
//! This crate computes three related things and checks them against each
//! other:
//!
//! 1. **Steklov eigenpairs** `mu_j` of a smooth domain, via a P1 finite
//!    element discretization of the pencil `K u = mu (M / |bd|) B u`.
//! 2. **Neumann eigenvalues** `lambda_j(eps)` of the same domain when the
//!    total mass `M` is concentrated in a boundary strip of width `eps`
//!    (constant bulk density `eps`, heavy strip density), plus the
//!    closed-form first-order coefficient `mu_j^1` in the two-term expansion
//!    `lambda_j(eps) = mu_j + eps mu_j^1 + O(eps^2)`.
//! 3. **Quasimode diagnostics**: boundary-layer correctors, residual decay
//!    rates of the associated resolvent, and an independent Bessel oracle on
//!    the unit disk that provides eigenvalues to near machine precision.
//!
//! All kernels are generic over the scalar type via [`scalar::Real`]; the
//! aliases at the crate root fix `f64`, which is what the command-line
//! interface and the stated tolerances use.

pub mod asymptotics;
pub mod ball;
pub mod eigensolve;
pub mod error;
pub mod fem;
pub mod fitting;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod msh;
pub mod perturbed;
pub mod pipeline;
pub mod quad;
pub mod quasimode;
pub mod report;
pub mod scalar;
pub mod steklov;

pub use error::{Error, Result};
pub use scalar::{real, Real};

/// Default scalar for CLI-facing work.
pub type Scalar = f64;
/// Boundary curve over the default scalar.
pub type Curve = geometry::BoundaryCurve<Scalar>;
/// Curve family descriptor over the default scalar.
pub type CurveSpec = geometry::CurveKind<Scalar>;
