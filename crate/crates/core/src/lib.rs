//! Numerical laboratory for the two-dimensional Boussinesq perturbation
//! system near hydrostatic balance, with viscosity acting only through
//! `∂₂₂` on the velocity and thermal diffusion only through `∂₁₁` on the
//! temperature:
//!
//! ```text
//! ∂t u + u·∇u = −∇p + ν ∂₂₂u + θ e₂,   ∇·u = 0,
//! ∂t θ + u·∇θ + u₂ = η ∂₁₁θ.
//! ```
//!
//! The crate provides the exact linear solution operator (as Fourier
//! multipliers), an independent per-mode ODE oracle, a pseudo-spectral
//! nonlinear solver on the torus, the Lyapunov and energy functionals that
//! quantify decay and stability, and adaptive quadrature on ℝ² for the
//! algebraic decay rates the torus cannot exhibit.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod linear;
pub mod nonlinear;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use kernels::{KernelEval, Params, Region};
pub use spectral::{Axis, FrequencyGrid, SpectralField, VectorField};
