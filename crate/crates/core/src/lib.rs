//! Community recovery in stochastic and censored block models whose edges
//! depend on two latent node variables: a community label `x` and an
//! auxiliary label `y` that carries no community information.
//!
//! The crate is organised around the workflow of studying such models:
//!
//! - [`model`]: parameter types and exact, reproducible graph samplers.
//! - [`divergence`]: Chernoff-Hellinger divergence, micro-community rate
//!   vectors and every exact-recovery threshold (general and binary).
//! - [`poisson`]: brute-force Poisson min-sum oracles used to check the
//!   divergence bounds.
//! - [`detect`]: genie-aided MAP detectors and brute-force ML for tiny graphs.
//! - [`sdp`]: the four semidefinite relaxations, a low-rank solver, rounding
//!   and dual-certificate verification.
//! - [`sim`]: Monte Carlo harness, figure boundaries and CSV artifacts.
//! - [`cli`]: the `auxsbm` command-line entry point.

pub mod cli;
pub mod detect;
pub mod divergence;
pub mod error;
pub mod model;
pub mod poisson;
pub mod sdp;
pub mod sim;

pub use error::{Error, Result};
