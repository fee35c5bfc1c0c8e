//! Regularized layer potentials for Laplace and Stokes problems on smooth
//! closed surfaces.
//!
//! The crate builds surface quadratures from an implicit surface description,
//! evaluates single and double layer potentials with kernels regularized so
//! that accuracy is retained on and near the surface, solves interior
//! boundary value problems on a regular grid by correcting a fast Poisson
//! solver near the surface, and solves viscous two-phase flow past a pair of
//! surfaces with an iterative boundary integral method.

// Quadrature sums walk several parallel node arrays by index.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod eval;
pub mod experiments;
pub mod fields;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod regular;
pub mod rng;
pub mod special;
pub mod surface;
pub mod two_phase;

pub use config::{Order, RegConfig};
pub use eval::{classify, EvalTarget, Evaluator, TargetClass};
pub use quadrature::SurfaceQuadrature;
pub use regular::Coeffs;
pub use surface::{Surface, SurfacePoint, Vec3};
pub use two_phase::{gmres, GmresOutcome, TwoSurfaceSolution, TwoSurfaceStokes};

use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid line crossed the surface more than once between adjacent
    /// sample points, so the surface cannot be resolved at this spacing.
    #[error("surface under-resolved at h = {h}: two crossings in one step of the grid line through ({x0}, {y0}, {z0}) along axis {axis}")]
    UnderResolved {
        h: f64,
        axis: usize,
        x0: f64,
        y0: f64,
        z0: f64,
    },

    /// The closest point iteration did not converge for a target.
    #[error("closest point iteration failed for target ({0}, {1}, {2})")]
    ClosestPointDiverged(f64, f64, f64),

    /// A configuration value was out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The iterative solver did not reach the requested tolerance.
    #[error("gmres stalled at relative residual {residual:.3e} after {iters} iterations (tolerance {tol:.3e})")]
    GmresStalled {
        residual: f64,
        iters: usize,
        tol: f64,
    },

    /// An input or output operation failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
