//! N-soliton solutions of the Korteweg-de Vries equation built from the
//! Fredholm-type determinant `det(1 + C_N(t, x))`, together with the
//! numerical checks that accompany them: PDE residuals, the discrete and
//! scattering spectrum of the associated Schrödinger operator, the KdV trace
//! relations, and convergence of the truncations as `N` grows.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and the
//! command-line frontend live in the `soliton-lab` crate.
//!
//! ```
//! use soliton_core::{field, params::SolitonParams};
//!
//! // kappa = 1, c = sqrt(2) gives V(0, x) = -2 sech^2(x).
//! let p = SolitonParams::explicit(vec![1.0], vec![core::f64::consts::SQRT_2]).unwrap();
//! let v = field::potential_det(&p, 1, 0.0, 0.0).unwrap();
//! assert!((v + 2.0).abs() < 1e-12);
//! ```
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod determinant;
mod error;
pub mod field;
pub mod invariants;
pub mod jet;
pub mod limit;
pub mod linalg;
pub mod params;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
