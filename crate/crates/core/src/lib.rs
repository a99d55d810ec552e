//! Steklov eigenvalue laboratory for small domains in Riemannian manifolds.
//!
//! The crate computes the first nontrivial Steklov eigenvalue ν₂ of geodesic
//! balls, curvature-balanced geodesic ellipsoids and star-shaped perturbations
//! on a handful of model manifolds, and compares the results against the
//! closed-form small-volume expansions of the Weinstock–Brock profile.
//!
//! Layout:
//!
//! - [`geometry`]: model manifolds, curvature at a point, exponential and
//!   logarithm maps, rescaled normal-coordinate charts `g_r` and `h_r`.
//! - [`mesh`]: simplicial meshes of the unit disk/ball and of planar star domains.
//! - [`steklov`]: P1 assembly under a metric chart and the Steklov eigensolver
//!   (Dirichlet-to-Neumann reduction, with a shifted subspace iteration for
//!   large boundaries).
//! - [`domains`]: ellipsoid coefficients, volumes, boundary moments, boundary
//!   centroids and symmetric differences.
//! - [`expansions`]: closed-form predictors.
//! - [`profile`]: coefficient fitting, profile scans and shape search.
//! - [`cli`]: run configuration, reports and the command implementations
//!   behind the `steklov` binary.
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability; start with `cargo run --release --example disk_oracle`.

pub mod cli;
pub mod domains;
pub mod error;
pub mod expansions;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod profile;
pub mod quadrature;
pub mod steklov;

pub use error::{Result, SteklovError};
