//! Symbol-level constructive-interference (CI) precoding for the multiuser
//! MISO downlink with rectangular M-QAM.
//!
//! For every symbol slot the transmitter knows both the channel `H` and the
//! data symbols of all users, and chooses the transmit vector `x` of minimum
//! power such that each user receives its symbol either exactly (interior
//! constellation coordinates) or pushed deeper into its unbounded detection
//! region (extreme coordinates).
//!
//! Module map:
//!
//! * [`mqam`] - unit-power constellations, coordinate classes, hard detection.
//! * [`chanmodel`] - Rayleigh channel generation and cross-correlations.
//! * [`solver`] - least-norm active-set solver, enumeration oracle, multicast SDP.
//! * [`slp`] - per-slot constraint construction, CI and ZF precoders, diagnostics.
//! * [`linksim`] - Monte Carlo link simulation and sweep metrics.
//! * [`validate`] - invariant suite used by the `validate` CLI command.

pub mod chanmodel;
mod error;
pub mod linksim;
pub mod mqam;
pub mod rng;
pub mod slp;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Converts a power quantity in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power quantity to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
