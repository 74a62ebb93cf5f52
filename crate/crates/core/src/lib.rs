//! Numerical mountain-pass pipeline for the Allen–Cahn energy on flat tori.
//!
//! The library constructs critical points of
//! E_ε(u) = ∫ ε|∇u|²/2 + W(u)/ε between the pure phases ∓1, certifies their
//! Morse index through a matrix-free eigensolver, drives ε → 0 along a
//! continuation ladder, and checks the energy identities that tie the
//! solutions to the area of their limit interface: varifold mass vs
//! E/(2σ), discrepancy and equipartition decay, isoperimetric lower bounds
//! and sweepout upper bounds, and discrete slice extraction with controlled
//! masses and neighbor volumes.
//!
//! Module map:
//! - [`geometry`]: periodic domains, fields, stencils, quadrature, distance
//!   functions (closed forms and fast marching).
//! - [`potential`]: the double well W, σ, Ψ and the heteroclinic profile ψ.
//! - [`energy`]: E_ε, first/second variations, varifold mass, discrepancy,
//!   first-variation identity, monotonicity profile.
//! - [`minmax`]: paths, relaxation, saddle certification, c_ε.
//! - [`spectrum`]: lowest eigenvalues of −εΔ + W''(u)/ε, Morse index,
//!   localized stability.
//! - [`sweepout`]: slice families, the profile path construction with end
//!   caps, level-set extraction, parallel-area checks.
//! - [`ladder`]: ε-continuation with re-profiled warm starts.
//! - [`diagnostics`]: De Giorgi lower bound, volume lemmas, discrete
//!   sweepout extraction, ladder decay tables.
//! - [`config`] / [`experiment`]: plain-text configuration, orchestration,
//!   persistence, reporting.

pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod ladder;
pub mod minmax;
pub mod potential;
pub mod spectrum;
pub mod sweepout;

mod linalg;
mod quad;

pub use error::{AcError, Result};
