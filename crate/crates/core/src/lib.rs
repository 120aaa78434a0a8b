//! Piecewise linear approximation of parametric optimization policies.
//!
//! Sample exact solutions `x*(θ)` of a parametric LP, QP or finite problem,
//! triangulate the sampled parameters and interpolate barycentrically. The
//! crate also measures the resulting policy and trains small ReLU networks
//! on it.
//!
//! # Examples
//!
//! Each capability has a runnable example in `examples/`:
//!
//! - `example1_policy`: fit the two-variable LP policy and compare with its closed form
//! - `solve_problems`: exact solves, tie-breaking samplers, γ-relaxed solves, projection
//! - `triangulate`: Delaunay triangulations for k = 1, 2, 3 and point location
//! - `convergence`: worst-case gaps of a random QP under grid refinement
//! - `sampler_stability`: arbitrary versus fixed tie-breaking on finite problems
//! - `policy_metrics`: per-parameter gaps, aggregates and the CSV report
//! - `train_network`: network training, gradient check, norms and the bound
//! - `margin_sweep`: feasibility of network predictions as constraints tighten
//! - `problem_files`: writing a problem by hand and loading it back
//!
//! Run one with `cargo run --release --example <name>`.

pub mod data;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod plot;
pub mod policy;
pub mod problems;
pub mod simplicial;
pub mod solvers;

pub use error::{Error, Result};
