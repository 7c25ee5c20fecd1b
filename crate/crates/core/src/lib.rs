//! Outage-constrained power allocation for HARQ-based predictor antenna (PA)
//! links.
//!
//! A vehicle carries a predictor antenna in front of a receive antenna. The
//! base station sends a first round at fixed power `P1` with no channel
//! knowledge; on a NACK the PA feeds back its channel gain `g1` and the second
//! round is sent to the receive antenna with power `P2(g1)` chosen so that the
//! conditional outage equals the target. The receive antenna channel `g2` is
//! correlated with `g1` through the spatial mismatch parameter `sigma`.
//!
//! Modules, bottom up:
//!
//! * [`specfn`]: Bessel I, Marcum Q1 (exact, fitted, inverse), Lambert W.
//! * [`numeric`]: adaptive quadrature, bracketed root finding, golden section.
//! * [`channel`]: the correlated Rayleigh model and its samplers.
//! * [`harq`]: second-round power rules for repetition (RTD) and incremental
//!   redundancy (INR) combining.
//! * [`alloc`]: average-power minimisation, numeric and closed form.
//! * [`bench`]: open-loop HARQ and no-retransmission baselines.
//! * [`mc`]: seeded protocol-level Monte Carlo.

pub mod alloc;
pub mod bench;
pub mod channel;
mod error;
pub mod harq;
pub mod mc;
pub mod numeric;
mod prob;
pub mod specfn;

pub use alloc::{PowerSolution, SolutionMethod};
pub use channel::{ChannelGain, ChannelParams, Geometry, QuantileMethod};
pub use error::{Error, Result};
pub use harq::{HarqConfig, P2Rule, Protocol};
pub use mc::McReport;
pub use prob::Probability;

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Decibels to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
