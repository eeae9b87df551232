//! Numerical toolkit for degenerate Ornstein-Uhlenbeck (Kolmogorov-type)
//! operators `div(A grad) + <Bx, grad>` with block-nilpotent drift:
//!
//! - exact homogeneous-group calculus (drift flow, covariance, dilations,
//!   translation group) in [`operator`];
//! - the explicit fundamental solution, its residual check and the exact
//!   Gaussian transition sampler in [`kernel`];
//! - composable membership-oracle domains and cylinders in [`domain`];
//! - the divergence-series boundary-regularity criterion in [`criterion`];
//! - exit-time Monte Carlo Dirichlet solvers and regularity probes in
//!   [`solver`];
//! - the strictly-superharmonic barrier construction in [`barrier`];
//! - end-to-end equivalence experiments in [`harness`].

pub mod barrier;
pub mod criterion;
pub mod data;
pub mod domain;
pub mod error;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod operator;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{KolmoError, Result};
pub use kernel::FundamentalSolution;
pub use operator::{BlockSignature, GroupPoint, OuOperator};
