//! Variational solver for standing waves of the nonlinear Klein-Gordon
//! equation on bounded domains.
//!
//! The standing-wave ansatz reduces the time-dependent equation to
//! `-ε²Δu + W'(u) = ω²u` with `(u, ω)` constrained to the charge manifold
//! `ω ∫u² = σ εᴺ`. This crate minimizes the constraint-reduced energy on
//! radial and masked Cartesian grids and packages the batch experiments that
//! probe how the minimal levels behave under scaling, domain growth and
//! barycenter pinning.

pub mod config;
pub mod error;
pub mod experiments;
pub mod functional;
pub mod grid;
pub mod multistart;
pub mod potential;
pub mod report;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};
pub use functional::{ChargeSpec, FieldState};
pub use grid::{Domain, Grid, MaskedGrid, RadialGrid, Shape};
pub use potential::{HypothesisReport, Potential, ScanParams};
pub use solver::{SolveOptions, SolveResult};
