//! A finite-volume laboratory for a traffic conservation law whose velocity
//! responds to a *look-ahead* average of the density: each driver adapts to
//! an anisotropic, weighted view of the road ahead over a length `epsilon`,
//! and the model relaxes to the classical local law as that length shrinks.
//!
//! The crate provides, behind small composable types:
//!
//! - look-ahead kernels with validation, exact-mass discretization and fast
//!   convolution ([`kernel`]);
//! - speed laws and their entropy pairs ([`velocity`]);
//! - a monotone upwind marcher for the nonlocal law with exact mass
//!   accounting ([`nonlocal`]);
//! - a classical reference solver and exact single-jump solutions
//!   ([`local`]);
//! - characteristic-curve tracing through computed fields
//!   ([`characteristics`]);
//! - variation monitors, an entropy-defect quadrature in difference form,
//!   and rate fitting ([`diagnostics`]);
//! - exact piecewise-constant initial data, including multiscale block
//!   families that drive the variation of the look-ahead average upward
//!   ([`scenarios`]);
//! - deterministic CSV/JSON artifacts ([`io`]).
//!
//! Two modeling facts shape the defaults. The variation of the look-ahead
//! average is non-increasing in time for *convex* kernels, and the uniform
//! window (not convex) breaks that monotonicity on purpose-built data; the
//! solver therefore records variation series at every step. And while the
//! density itself converges to the entropy solution of the local law as
//! `epsilon -> 0`, the look-ahead average satisfies entropy inequalities
//! only up to a defect of order `epsilon`, which [`diagnostics`] measures.

pub mod characteristics;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod local;
pub mod nonlocal;
pub mod scenarios;
pub mod velocity;

pub use error::{Error, Result};
pub use grid::{Grid1D, Profile};
pub use kernel::{convolve, discretize, DiscreteKernel, KernelSpec};
pub use nonlocal::{solve, NonlocalConfig, NonlocalRun};
pub use velocity::VelocityModel;
