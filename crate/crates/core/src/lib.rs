//! Numerical laboratory for the doubly nonlinear parabolic equation
//! `∂ₜu = 𝓛_{p,φ} u^q` with `𝓛_{p,φ}v = e^{φ} div(e^{-φ}|∇v|^{p-2}∇v)`.
//!
//! The crate discretizes the weighted p-Laplacian on interval and radial grids
//! with a summation-by-parts finite-volume stencil, integrates the resulting
//! system in time, and evaluates the energies `I`, `D` and the frequencies
//! `N = D/I`, `N_G = D/I^{pq/(q+1)}` along solutions. Closed-form Barenblatt and
//! eigenexpansion solutions serve as oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barenblatt;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod initial;
pub mod operator;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
