//! hp-version continuous and discontinuous Galerkin time stepping for
//! `u' = F(t, u)` in `R^d`, with a conditional a posteriori error estimator
//! that drives h- and hp-adaptive marching towards finite-time blow-up.
//!
//! The pieces, bottom up:
//!
//! - [`poly`]: Legendre polynomials on intervals, Gauss–Legendre rules, L² projection.
//! - [`problem`]: the right-hand side, its Lipschitz envelope and the built-in examples.
//! - [`galerkin`]: single-interval cG/dG solves by Picard iteration, and the reconstruction.
//! - [`estimator`]: residual, recursive estimator `psi`, growth factor `delta`.
//! - [`adapt`]: the h and hp drivers.
//! - [`study`]: configuration files, run reports, tolerance sweeps and rate fits.

pub mod adapt;
pub mod error;
pub mod estimator;
pub mod galerkin;
pub mod poly;
pub mod problem;
pub mod study;

pub use adapt::{adapt, h_adapt, hp_adapt, AdaptConfig, Mode, RunResult, Termination};
pub use error::{Error, NoConvergence, Result};
pub use galerkin::{PicardConfig, Scheme};
pub use poly::{gauss_legendre, Interval, LocalPoly, QuadRule};
pub use problem::Problem;
