//! Numerics for the one-dimensional Dirac operator `H = iα∂ₓ + mβ + V(x)`,
//! with `α = diag(-1, 1)` and `β = σ_x`.
//!
//! The crate covers free and perturbed resolvents (via a Lippmann–Schwinger
//! solve after a gauge reduction to a matrix Schrödinger operator), spectral
//! data in the gap `(-m, m)`, time evolution by Crank–Nicolson and by the
//! spectral representation, the Born splitting of the high-energy flow, and
//! Duhamel scattering states.

pub mod dirac;
pub mod error;
pub mod evolution;
pub mod field;
pub mod fit;
pub mod fourier;
pub mod free;
pub mod gauge;
pub mod grid;
pub mod potential;
pub mod resolvent;
pub mod special;

pub use dirac::{apply_dirac, weighted_operator_norm, LinearOperator};
pub use error::{Error, Result};
pub use field::{Mat2, Spinor, SpinorField};
pub use grid::Grid;
pub use potential::{MatrixPotential, PotentialSpec};
pub use num_complex::Complex64;
