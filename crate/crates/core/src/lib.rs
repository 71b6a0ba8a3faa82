//! Numerical laboratory for ergodic averages.
//!
//! The crate is organised around six settings, each checked
//! against an independent exact or statistical reference:
//!
//! * [`spectral`]: Hermitian decompositions, unitary and semigroup evolution,
//!   Cesàro time averages and their exact infinite-time limits.
//! * [`chain`]: the discretised nonlinear wave chain, its Störmer–Verlet flow,
//!   time averages, phase-volume checks and the damped/rescaled correspondence.
//! * [`gibbs`]: the configuration-space Gibbs measure, Metropolis sampling,
//!   expectations with error bars and integrability checks.
//! * [`stationary`]: the low-temperature saddle point and its first-order
//!   Laplace correction.
//! * [`langevin`]: overdamped/underdamped Langevin dynamics and the
//!   semilinear stochastic heat equation on a lattice.
//! * [`galerkin`]: spectral Galerkin solution of the defocusing polynomial
//!   wave equation with energy, convergence, interpolation and stability checks.
//!
//! Shared pieces live in [`stats`], [`quadrature`], [`rng`], [`observable`]
//! and [`io`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod chain;
pub mod error;
pub mod galerkin;
pub mod gibbs;
pub mod io;
pub mod langevin;
pub mod observable;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod stationary;
pub mod stats;

pub use error::{Error, Result};
pub use observable::ObservableSpec;
pub use stats::{EstimateWithError, Method};
