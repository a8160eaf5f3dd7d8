//! Small positive solutions of the φ-Laplacian Dirichlet problem
//!
//! ```text
//! -div(φ(|∇u|²)∇u) = f(x, u)   in Ω,     u = 0 on ∂Ω
//! ```
//!
//! with a nonlinearity `f` that oscillates near `t = 0`. For every branch
//! index `n` the solver minimizes the discrete energy
//!
//! ```text
//! J(u) = ½ ∫ Φ(|∇u|²) dx − ∫ F(x, u) dx
//! ```
//!
//! over the nodal order interval `[β_n φ₁, γ_n]`, where `(λ₁, φ₁)` is the
//! first Dirichlet eigenpair of `−Δ`, and reports how the branch decays in the
//! discrete C¹ norm as `n` grows.
//!
//! Module map:
//!
//! * [`mesh`] P1 simplicial meshes (interval, unit square) and field operations
//! * [`eigen`] first Dirichlet eigenpair by inverse power iteration
//! * [`model`] operator family φ/Φ and nonlinearity family f/F with the built-in example
//! * [`hypotheses`] numerical audits of the structural hypotheses
//! * [`solver`] energy, gradient, projected-gradient branch solves
//! * [`cli`] flag parsing, orchestration and output files

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod eigen;
mod error;
pub mod hypotheses;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod par;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
