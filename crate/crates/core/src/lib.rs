//! Learning-based robust adaptive MPC.
//!
//! Nominally linear systems `x⁺ = A x + B u + W φ(x) + v` with an unknown
//! weight matrix `W` are controlled by
//!
//! * an online estimator of `W` ([`estimate`]),
//! * certainty-equivalent cancellation of the matched part `B B† Ŵφ(x)`,
//! * a disturbance-feedback tube MPC whose disturbance box covers the noise,
//!   the estimation error and the unmatched residual ([`bounds`], [`mpc`]).
//!
//! [`sim`] holds plants, experiments and the closed-loop harness; [`cli`]
//! is the command-line front end.

pub mod error;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod controller;
pub mod estimate;
pub mod geom;
pub mod mpc;
pub mod rng;
pub mod sim;
pub mod terminal;

pub use error::{Error, Result};
