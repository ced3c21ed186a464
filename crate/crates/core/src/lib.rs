//! Finite-blocklength achievability and converse bounds for energy-harvesting
//! channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: normal CDF/quantile, incomplete gamma, non-central χ²,
//!   the Birgé lower-tail bound and Gaussian information-density moments.
//! - [`ehmodel`]: energy-arrival laws, the harvest-use-store buffer and the
//!   channel specifications.
//! - [`hypotest`]: Neyman–Pearson β functions and the tail bounds feeding the
//!   meta-converse.
//! - [`awgn_bounds`]: save-and-transmit achievability and the energy-harvesting
//!   meta-converse for the EH-AWGN channel.
//! - [`dmc_bounds`]: cost-constrained Blahut–Arimoto, dispersion, EH-DMC bounds
//!   and method-of-types tooling.
//! - [`mcsim`]: seeded Monte Carlo checks of the achievability error events.
//! - [`verify`]: brute-force oracle sweeps shared by the CLI and the tests.
//!
//! All information quantities are carried in nats internally; [`units`] holds
//! the conversions applied at presentation boundaries.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod awgn_bounds;
pub mod dmc_bounds;
pub mod ehmodel;
mod error;
pub mod hypotest;
pub mod mcsim;
pub mod numkernel;
pub mod units;
pub mod verify;

pub use error::{Error, Result};

