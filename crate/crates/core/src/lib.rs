//! Outage analysis of widely linear (WL) and conventional linear (CL)
//! multi-user MIMO receivers.
//!
//! The crate is organised bottom-up:
//!
//! - [`random_matrix`]: channel sampling, the WL transform, ordered symmetric
//!   eigendecomposition and Haar unit vectors.
//! - [`wishart`]: small-eigenvalue asymptotics of real central Wishart
//!   matrices (diversity exponents, the smallest-eigenvalue coefficient via a
//!   Pfaffian, empirical CDFs).
//! - [`link`]: power-variation profiles, pathloss/shadowing and the real-valued
//!   received model.
//! - [`receivers`]: ZF/MMSE detection matrices and output SINRs, with and
//!   without successive interference cancellation.
//! - [`outage`]: simulated outage curves, diversity/coding gains and the
//!   WL-versus-CL comparison laws.
//! - [`montecarlo`]: seeded parallel trial execution, confidence intervals and
//!   log-log slope fitting.
//! - [`mmtc`]: grant-free massive machine-type access simulation.

pub mod error;
pub mod link;
pub mod mmtc;
pub mod montecarlo;
pub mod outage;
pub mod random_matrix;
pub mod receivers;
pub mod rng;
pub mod wishart;

pub use error::{Error, Result};
