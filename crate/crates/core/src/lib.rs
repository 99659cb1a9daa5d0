//! Design and validation toolkit for network-coded multi-edge-type LDPC
//! codes on a Gaussian multiple-access relay uplink.
//!
//! M sources transmit to a destination; a relay decodes each source through
//! a private "lower" LDPC graph and forwards network-coded parity that the
//! destination exploits through shared "upper" check nodes. This crate
//! covers the full design loop for such codes:
//!
//! - [`capacity`]: rate algebra of the relay link and the power split that
//!   balances relay decoding against end-to-end decoding.
//! - [`mi`]: the J-function (mutual information of a consistent Gaussian
//!   LLR), its inverse, and a Monte-Carlo reference oracle.
//! - [`ensemble`]: multi-edge-type degree profiles, their rates,
//!   socket-balance checks, and derived variants.
//! - [`exit`]: iterative EXIT analysis, convergence classification, and the
//!   noise-threshold search.
//! - [`optimizer`]: differential-evolution search for profiles maximizing
//!   the system threshold under rate and socket constraints.
//! - [`tanner`]: finite-length code sampling, belief-propagation decoding,
//!   and end-to-end error-rate simulation.
//! - [`profile_io`]: a plain-text interchange format for profiles.

// Validation guards are written as !(x > 0.0) rather than x <= 0.0 so that
// NaN arguments fail them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod ensemble;
mod error;
pub mod exit;
mod gauss;
mod linalg;
pub mod mi;
pub mod optimizer;
pub mod profile_io;
mod stream;
pub mod tanner;

pub use error::{Error, Result};

#[cfg(test)]
mod fixtures;
