//! Achievable secure degrees of freedom for the two-user Gaussian
//! interference-assisted wiretap channel.
//!
//! The crate is organised around the pieces of the structured-coding argument:
//!
//! * [`channel`]: the scaled real model, the complex-gain reduction, and the
//!   rational decomposition `sqrt(ab) = (p + gamma) / q`.
//! * [`codes`]: scalar lattice codebooks, one-dimensional nested lattices with
//!   dithering, and digit (PAM) codebooks.
//! * [`infotheory`]: exact discrete mutual information, the integer-lattice
//!   leakage `f(Q)`, Gaussian-mixture mutual information by quadrature, and
//!   exhaustive leakage audits.
//! * [`dof`]: closed-form rates and secure DoF for every scheme, plus the
//!   sweep over `sqrt(ab)`.
//! * [`layersim`]: Monte Carlo of the layered nested-lattice transmission with
//!   successive decoding.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature off
//! every loop runs sequentially and produces bit-identical output.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codes;
pub mod dof;
mod error;
mod exec;
pub mod infotheory;
pub mod layersim;

pub use error::{Error, Result};
pub use exec::Exec;
