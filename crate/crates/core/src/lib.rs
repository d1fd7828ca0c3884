//! Extremal density matrices of qudit observables.
//!
//! Given a Hermitian operator `H` on `C^d`, the states extremizing `Tr(H rho)`
//! at a fixed degree of mixing are the states commuting with `H` whose
//! characteristic polynomial has prescribed coefficients. This crate finds
//! them algebraically, in generalized Bloch coordinates, and recovers the
//! spectrum of `H` and its eigenprojectors from the pure ones.

pub mod commutant;
pub mod error;
pub mod extremal;
pub mod linalg;
pub mod oracle;
pub mod poly_solver;
pub mod positivity;
pub mod su_algebra;

pub use error::{Error, Result};
pub use extremal::{convex_decomposition, extremal_spectrum, extremal_states, numerical_range, CriticalSolution, SpectralResult};
pub use positivity::{Admissibility, AdmissibilityStatus, PurityConstraints};
pub use su_algebra::{BlochVector, HermitianOperator};
