//! Symbolic asymptotic expansions for flows near a nonlinear sink
//! `ẋ = Ax + b(x)`, with numerical verification of every guaranteed
//! order and coefficient.
//!
//! The library is organized around the pipeline:
//!
//! 1. [`system`] — parse (A, b), compute the spectrum, classify the
//!    eigenvalue spacing against the vanishing order of b, detect
//!    resonances exactly, diagonalize;
//! 2. [`expalg`] — the exponential-polynomial algebra the iterates live
//!    in, closed under the two convolution integrals;
//! 3. [`iterates`] — the iterate sequences D_m and near-identity
//!    transformation approximations ψ_m for both spacing regimes;
//! 4. [`relate`] — component-vs-component asymptotic relations,
//!    including resonant logarithm terms;
//! 5. [`mm`] — the Michaelis–Menten application;
//! 6. [`numeric`] — the independent oracle: trajectory integration,
//!    quadrature, numerical ψ, and decay/relation fitting;
//! 7. [`validate`] — the randomized oracle suites behind `validate`.

pub mod error;
pub mod expalg;
pub mod iterates;
mod linalg;
pub mod mm;
pub mod numeric;
pub mod relate;
pub mod system;
pub mod validate;

pub use error::{Error, Result};
