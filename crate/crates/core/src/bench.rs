//! Benchmarks without channel knowledge at the transmitter.
//!
//! Open loop: both rounds use the same power `P`, so the average power is
//! `P (2 - e^{-theta/P})` and the outage is the round-2 failure probability
//! conditioned on a round-1 failure. No retransmission: a single round at
//! `P` with outage `1 - e^{-theta/P}`.

use crate::channel::cond_cdf_g2;
use crate::error::{domain, Error, Result};
use crate::harq::{theta, theta1, Protocol};
use crate::numeric::integrate;
use crate::prob::Probability;

/// 1e-4 dB in natural log units.
const LN_PTOL: f64 = 1e-4 * std::f64::consts::LN_10 / 10.0;
const POWER_LO: f64 = 1e-3;
const POWER_HI: f64 = 1e12;

/// Average open-loop power `P (2 - e^{-theta/P})`.
pub fn open_loop_avg_power(power: f64, rate: f64) -> f64 {
    power * (2.0 - (-theta(rate) / power).exp())
}

/// Closed-form conditional outage from the two-term expansion of the
/// conditional CDF, before clamping into `[0, 1]`.
///
/// `body_threshold` enters the integrand; the conditioning event is
/// `g1 < cond_threshold / P`.
fn zeta_closed_raw(body_threshold: f64, cond_threshold: f64, power: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let s4 = s2 * s2;
    let s6 = s4 * s2;
    let s8 = s4 * s4;
    let u = body_threshold / power;
    let big_u = cond_threshold / power;
    // The leading bracket term multiplies e^{u/s2}; folding in the outer
    // e^{-u/s2} keeps the expression finite for tiny P.
    let decay = (-u / s2).exp();
    let poly = (3.0 * s2 - 3.0 * s4) * u * u + (12.0 * s4 - 6.0 * s6) * u + (1.0 - s2) * u * u * u;
    let inner = (6.0 * s8 - 12.0 * s6) * -(-u / s2).exp_m1() + decay * poly;
    -inner / (6.0 * s4 * -(-big_u).exp_m1())
}

/// Unclamped closed-form RTD open-loop outage.
pub fn zeta_rtd_closed_unclamped(power: f64, rate: f64, sigma: f64) -> f64 {
    let t = theta(rate);
    zeta_closed_raw(t, t, power, sigma)
}

/// Unclamped closed-form INR open-loop outage: the Jensen threshold in the
/// body, the true first-round threshold in the conditioning.
pub fn zeta_inr_closed_unclamped(power: f64, rate: f64, sigma: f64) -> f64 {
    zeta_closed_raw(theta1(rate), theta(rate), power, sigma)
}

fn clamp_logged(raw: f64, what: &str) -> Probability {
    if !(0.0..=1.0).contains(&raw) {
        log::warn!("{what} closed-form outage {raw:e} clamped into [0, 1]");
    }
    Probability::clamped(raw)
}

pub fn zeta_rtd_closed(power: f64, rate: f64, sigma: f64) -> Probability {
    clamp_logged(zeta_rtd_closed_unclamped(power, rate, sigma), "RTD")
}

pub fn zeta_inr_closed(power: f64, rate: f64, sigma: f64) -> Probability {
    clamp_logged(zeta_inr_closed_unclamped(power, rate, sigma), "INR")
}

pub fn zeta_closed(protocol: Protocol, power: f64, rate: f64, sigma: f64) -> Probability {
    match protocol {
        Protocol::Rtd => zeta_rtd_closed(power, rate, sigma),
        Protocol::Inr => zeta_inr_closed(power, rate, sigma),
    }
}

/// Open-loop conditional outage from the exact conditional CDF, by quadrature
/// over `g1` on the round-1 failure region.
pub fn zeta_exact(protocol: Protocol, power: f64, rate: f64, sigma: f64) -> Result<Probability> {
    if !(power > 0.0 && rate > 0.0) {
        return Err(domain(format!("power = {power}, rate = {rate} must be positive")));
    }
    let u = theta(rate) / power;
    let needed = |g1: f64| match protocol {
        Protocol::Rtd => u - g1,
        Protocol::Inr => (rate - (g1 * power).ln_1p()).exp_m1() / power,
    };
    let joint = integrate(|g1| cond_cdf_g2(needed(g1), g1, sigma).value() * (-g1).exp(), 0.0, u.min(60.0), 1e-10, 1e-300)?;
    Ok(Probability::clamped(joint.value / -(-u).exp_m1()))
}

/// Open-loop operating point meeting an outage target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenLoopSolution {
    pub power: f64,
    pub avg_power: f64,
    pub outage: Probability,
}

/// Smallest `P` whose closed-form open-loop outage is at most `target`,
/// by bisection in `ln P`.
pub fn open_loop_required_power(target: Probability, rate: f64, sigma: f64, protocol: Protocol) -> Result<OpenLoopSolution> {
    let sol = solve_required_power(target, |p| {
        Ok(match protocol {
            Protocol::Rtd => zeta_rtd_closed_unclamped(p, rate, sigma),
            Protocol::Inr => zeta_inr_closed_unclamped(p, rate, sigma),
        })
    })?;
    Ok(OpenLoopSolution {
        power: sol,
        avg_power: open_loop_avg_power(sol, rate),
        outage: zeta_closed(protocol, sol, rate, sigma),
    })
}

/// As [`open_loop_required_power`], on the exact conditional outage.
pub fn open_loop_required_power_exact(target: Probability, rate: f64, sigma: f64, protocol: Protocol) -> Result<OpenLoopSolution> {
    let sol = solve_required_power(target, |p| Ok(zeta_exact(protocol, p, rate, sigma)?.value()))?;
    Ok(OpenLoopSolution {
        power: sol,
        avg_power: open_loop_avg_power(sol, rate),
        outage: zeta_exact(protocol, sol, rate, sigma)?,
    })
}

fn solve_required_power(target: Probability, mut zeta: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let target = Probability::open(target.value())?.value();
    let (mut lo, mut hi) = (POWER_LO.ln(), POWER_HI.ln());
    if zeta(POWER_LO)? <= target {
        return Err(Error::Bracket(format!("outage already below {target:e} at P = {POWER_LO:e}")));
    }
    if zeta(POWER_HI)? > target {
        return Err(Error::Infeasible(format!("open-loop outage above {target:e} even at P = {POWER_HI:e}")));
    }
    while hi - lo > LN_PTOL {
        let mid = 0.5 * (lo + hi);
        if zeta(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

/// Single-shot outage `1 - e^{-theta/P}`.
pub fn no_retx_outage(power: f64, rate: f64) -> Probability {
    Probability::clamped(-(-theta(rate) / power).exp_m1())
}

/// Power at which a single round has outage `target`: `theta / -ln(1 - eps)`.
pub fn no_retx_required_power(target: Probability, rate: f64) -> Result<f64> {
    let eps = Probability::open(target.value())?.value();
    Ok(theta(rate) / -(-eps).ln_1p())
}
