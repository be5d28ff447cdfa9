//! Numerical solution of the one-dimensional time-fractional Fokker–Planck
//! equation with space- and time-dependent forcing,
//!
//! ```text
//! u_t - ∂_t^{1-α} u_xx + (F ∂_t^{1-α} u)_x = g,   0 < α < 1,
//! ```
//!
//! by continuous piecewise-linear Galerkin elements in space and an implicit,
//! Euler-like time-stepping scheme whose memory term integrates the
//! Riemann–Liouville kernel exactly over each time step.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem1d;
pub mod fracops;
pub mod harness;
pub mod problems;
pub mod quadrature;
pub mod stepper;

pub use error::{Error, Result};
pub use fem1d::{NodalVector, SpatialMesh, TriDiagMatrix};
pub use fracops::{ConvolutionWeights, KernelParams};
pub use problems::ProblemSpec;
pub use stepper::{solve, TemporalMesh, Trajectory};
