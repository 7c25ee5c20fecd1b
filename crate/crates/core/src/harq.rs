//! Second-round power rules `P2(g1)`.
//!
//! After a NACK the base station knows `g1` and picks the smallest `P2` that
//! keeps the round-2 outage at exactly `eps`:
//!
//! * RTD (maximum-ratio combining): success iff `g1 P1 + g2 P2 >= theta`, so
//!   `P2 = (theta - g1 P1) / F^{-1}(eps)`.
//! * INR (accumulated mutual information): success iff
//!   `ln(1 + g1 P1) + ln(1 + g2 P2) >= R`, so
//!   `P2 = (e^{R - ln(1 + g1 P1)} - 1) / F^{-1}(eps)`.
//!
//! `F^{-1}` is the conditional quantile of `g2` given `g1`.

use std::fmt;
use std::str::FromStr;

use crate::channel::{inv_cond_cdf_g2, QuantileMethod};
use crate::error::{domain, Error, Result};
use crate::prob::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Repetition time diversity.
    Rtd,
    /// Incremental redundancy.
    Inr,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Rtd => "rtd",
            Protocol::Inr => "inr",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rtd" => Ok(Protocol::Rtd),
            "inr" => Ok(Protocol::Inr),
            other => Err(domain(format!("unknown protocol {other:?} (expected rtd or inr)"))),
        }
    }
}

/// `theta = e^R - 1`: the SNR needed to carry `R` nats in one round.
pub fn theta(rate: f64) -> f64 {
    rate.exp_m1()
}

/// `theta1 = 2 (e^{R/2} - 1)`: the summed-SNR threshold that Jensen's
/// inequality gives for two INR rounds. Never exceeds [`theta`].
pub fn theta1(rate: f64) -> f64 {
    2.0 * (0.5 * rate).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqConfig {
    pub protocol: Protocol,
    /// Initial rate in nats per channel use.
    pub rate: f64,
    /// Outage target.
    pub eps: Probability,
    /// First-round power (linear SNR, unit noise).
    pub p1: f64,
}

impl HarqConfig {
    pub fn new(protocol: Protocol, rate: f64, eps: f64, p1: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(domain(format!("rate = {rate} must be positive")));
        }
        if !(p1 > 0.0 && p1.is_finite()) {
            return Err(domain(format!("p1 = {p1} must be positive")));
        }
        Ok(HarqConfig { protocol, rate, eps: Probability::open(eps)?, p1 })
    }

    pub fn with_p1(self, p1: f64) -> Self {
        HarqConfig { p1, ..self }
    }

    pub fn theta(&self) -> f64 {
        theta(self.rate)
    }

    pub fn theta1(&self) -> f64 {
        theta1(self.rate)
    }

    /// Threshold used by the closed-form analysis: `theta` for RTD, the
    /// Jensen threshold `theta1` for INR.
    pub fn analytic_threshold(&self) -> f64 {
        match self.protocol {
            Protocol::Rtd => self.theta(),
            Protocol::Inr => self.theta1(),
        }
    }

    /// Whether round 1 decodes: `R <= ln(1 + g1 P1)`.
    pub fn decodes_first_round(&self, g1: f64) -> bool {
        (g1 * self.p1).ln_1p() >= self.rate
    }
}

/// RTD second-round power. Zero when `g1 P1 >= theta`.
pub fn p2_rtd(g1: f64, cfg: &HarqConfig, sigma: f64, method: QuantileMethod) -> Result<f64> {
    let numerator = cfg.theta() - g1 * cfg.p1;
    if numerator <= 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / inv_cond_cdf_g2(cfg.eps, g1, sigma, method)?)
}

/// INR second-round power. The exact and fitted methods use the exact INR
/// numerator; the asymptotic method uses the Jensen form
/// `(theta1 - g1 P1)^+`, which is zero on `theta1 <= g1 P1 < theta`.
pub fn p2_inr(g1: f64, cfg: &HarqConfig, sigma: f64, method: QuantileMethod) -> Result<f64> {
    if cfg.decodes_first_round(g1) {
        return Ok(0.0);
    }
    let numerator = match method {
        QuantileMethod::Asymptotic => (cfg.theta1() - g1 * cfg.p1).max(0.0),
        QuantileMethod::Exact | QuantileMethod::Fitted => inr_exact_numerator(g1, cfg),
    };
    if numerator <= 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / inv_cond_cdf_g2(cfg.eps, g1, sigma, method)?)
}

fn inr_exact_numerator(g1: f64, cfg: &HarqConfig) -> f64 {
    (cfg.rate - (g1 * cfg.p1).ln_1p()).exp_m1().max(0.0)
}

/// Power actually spent in round 2 by a [`P2Rule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round2Power {
    pub power: f64,
    /// The Jensen numerator was nonpositive although round 1 failed, and the
    /// exact INR numerator was used instead.
    pub jensen_fallback: bool,
}

/// A second-round power rule bound to a configuration, `sigma` and method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Rule {
    cfg: HarqConfig,
    sigma: f64,
    method: QuantileMethod,
}

impl P2Rule {
    pub fn new(cfg: HarqConfig, sigma: f64, method: QuantileMethod) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(domain(format!("sigma = {sigma} not in (0, 1]")));
        }
        Ok(P2Rule { cfg, sigma, method })
    }

    pub fn config(&self) -> &HarqConfig {
        &self.cfg
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn method(&self) -> QuantileMethod {
        self.method
    }

    /// The analytic rule, [`p2_rtd`] or [`p2_inr`].
    pub fn analytic(&self, g1: f64) -> Result<f64> {
        match self.cfg.protocol {
            Protocol::Rtd => p2_rtd(g1, &self.cfg, self.sigma, self.method),
            Protocol::Inr => p2_inr(g1, &self.cfg, self.sigma, self.method),
        }
    }

    /// Power a transmitter following this rule spends in round 2. Differs
    /// from [`P2Rule::analytic`] only for INR with the Jensen numerator when
    /// round 1 failed but `g1 P1 >= theta1`.
    pub fn power(&self, g1: f64) -> Result<Round2Power> {
        let jensen_gap = self.cfg.protocol == Protocol::Inr
            && self.method == QuantileMethod::Asymptotic
            && !self.cfg.decodes_first_round(g1)
            && self.cfg.theta1() - g1 * self.cfg.p1 <= 0.0;
        if jensen_gap {
            let x = inv_cond_cdf_g2(self.cfg.eps, g1, self.sigma, self.method)?;
            return Ok(Round2Power { power: inr_exact_numerator(g1, &self.cfg) / x, jensen_fallback: true });
        }
        Ok(Round2Power { power: self.analytic(g1)?, jensen_fallback: false })
    }
}
