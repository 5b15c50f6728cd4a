//! Eigenspectrum, exceptional points and constraint curves of the
//! generalized quantum Rabi model
//!
//! ```text
//! H = ω a†a + g σx (a† + a) + Δ σz + ε σx
//! ```
//!
//! computed from Braak's G-function. Eigenvalues are `E = x − g²/ω` where
//! `x` runs over the zeros of the pole-regularized function 𝒢ε(x).
//! Exceptional points sit on the baselines `x = Nω ± ε` and split into the
//! subset S1, where the constraint polynomial `K_N(x)` vanishes, and the
//! remaining subset S2.
//!
//! Every result can be cross-checked against [`oracle`], a dense Jacobi
//! diagonalization of the Hamiltonian in a truncated Fock basis that shares
//! no code with the G-function path.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(a > b)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod curves;
mod error;
pub mod exceptional;
pub mod gfunction;
mod math;
pub mod oracle;
mod params;
pub mod series;
pub mod signed_log;
pub mod spectrum;

pub use error::{Error, Result};
pub use exceptional::{Baseline, ExceptionalClass, ExceptionalPoint};
pub use gfunction::{BaselineValue, GValue, ZeroVerdict};
pub use params::{Branch, ModelParams, Truncation};
pub use signed_log::SignedLog;
pub use spectrum::{SpectralPoint, SpectrumSweep};
