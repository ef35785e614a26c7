//! Simulation and theory toolkit for the two-phase learning dynamics and
//! generalization error of two-layer linear networks trained on
//! spiked-covariance data.
//!
//! The crate is organized around four mutually checking routes to the same
//! physics:
//!
//! - [`spiked_data`] — the generative model, finite samples, empirical
//!   moments;
//! - [`adapted_basis`] — the data-adapted orthonormal basis and its scalar
//!   coefficients, by explicit matrix construction and by closed forms;
//! - [`linear_net`] — full-network gradient descent with trajectory
//!   diagnostics (projections, conservation residual, deviation energy,
//!   phase detection);
//! - [`reduced_dynamics`] — the two-variable scalar reduction, its analytic
//!   early-phase solution, both characteristic timescales, and phase-plane
//!   data;
//! - [`genx_error`] — the self-consistent effective-regularization equation,
//!   ridge/ridgeless risk formulas, and the minimum-norm interpolator.
//!
//! [`experiment`] orchestrates the standard experiments behind the
//! `spike-dyn` binary and emits their CSV/JSON artifacts. Each major
//! capability also has a runnable example under `examples/`.

// parameter guards use `!(x > 0.0)` so NaN is rejected along with the
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapted_basis;
pub mod error;
pub mod experiment;
pub mod genx_error;
pub mod io;
pub mod linear_net;
pub mod reduced_dynamics;
pub mod rng;
pub mod spiked_data;

pub use error::{Error, Result};
