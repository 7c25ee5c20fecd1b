//! Spatially correlated Rayleigh channel between the predictor antenna (gain
//! `g1`) and the receive antenna (gain `g2`):
//! `h2 = sqrt(1 - sigma^2) h1 + sigma q` with `h1, q ~ CN(0, 1)` independent.
//!
//! Given `g1`, `2 g2 / sigma^2` is noncentral chi-square with two degrees of
//! freedom, so its CDF is `1 - Q1(s, rho)` with
//! `s = sqrt(2 g1 (1 - sigma^2)) / sigma` and `rho = sqrt(2 x) / sigma`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{domain, Result};
use crate::prob::Probability;
use crate::specfn::{fit_exponent_poly, fit_scale_poly, marcum_tails, solve_rho_sq, MarcumTail};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Floor on `sigma`. At `sigma = 0` the conditional law of `g2` is a point
/// mass and the CDF is undefined.
pub const SIGMA_MIN: f64 = 1e-3;

/// Vehicle and radio geometry that fixes the mismatch distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub speed_mps: f64,
    pub delay_s: f64,
    pub carrier_hz: f64,
    pub antenna_separation_m: f64,
}

impl Geometry {
    pub fn new(speed_mps: f64, delay_s: f64, carrier_hz: f64, antenna_separation_m: f64) -> Result<Self> {
        for (name, v) in [
            ("speed", speed_mps),
            ("delay", delay_s),
            ("carrier frequency", carrier_hz),
            ("antenna separation", antenna_separation_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Geometry { speed_mps, delay_s, carrier_hz, antenna_separation_m })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Distance travelled during the processing delay.
    pub fn moved_distance(&self) -> f64 {
        self.speed_mps * self.delay_s
    }

    /// `|d_a - v delta|`.
    pub fn mismatch_distance(&self) -> f64 {
        (self.antenna_separation_m - self.moved_distance()).abs()
    }

    /// Speed at which the receive antenna lands exactly where the predictor
    /// antenna measured.
    pub fn alignment_speed(&self) -> f64 {
        self.antenna_separation_m / self.delay_s
    }
}

/// Maps a mismatch distance to `sigma`.
pub trait SigmaMapping: Send + Sync {
    fn sigma(&self, mismatch_m: f64, wavelength_m: f64) -> f64;
}

/// Jakes spatial correlation: the `h1`-`h2` correlation coefficient
/// `sqrt(1 - sigma^2)` equals `|J0(2 pi d / lambda)|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct JakesMapping;

impl SigmaMapping for JakesMapping {
    fn sigma(&self, mismatch_m: f64, wavelength_m: f64) -> f64 {
        let j0 = libm::j0(2.0 * PI * mismatch_m / wavelength_m);
        (1.0 - j0 * j0).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    sigma: f64,
    geometry: Option<Geometry>,
}

impl ChannelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(ChannelParams { sigma, geometry: None })
    }

    pub fn from_geometry(geometry: Geometry, mapping: &dyn SigmaMapping) -> Self {
        let raw = mapping.sigma(geometry.mismatch_distance(), geometry.wavelength());
        ChannelParams { sigma: raw.clamp(SIGMA_MIN, 1.0), geometry: Some(geometry) }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }
}

/// `sigma` from speed (m/s), delay (s), carrier (Hz) and antenna separation
/// (m) under the [`JakesMapping`], clamped to `[SIGMA_MIN, 1]`.
pub fn sigma_from_geometry(speed_mps: f64, delay_s: f64, carrier_hz: f64, antenna_separation_m: f64) -> Result<f64> {
    let g = Geometry::new(speed_mps, delay_s, carrier_hz, antenna_separation_m)?;
    Ok(ChannelParams::from_geometry(g, &JakesMapping).sigma())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("sigma = {sigma} not in (0, 1]")))
    }
}

/// Squared channel envelope `|h|^2`, linear scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ChannelGain(f64);

impl ChannelGain {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(ChannelGain(value))
        } else {
            Err(domain(format!("channel gain {value} < 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Noncentrality argument `s` of the conditional Marcum form.
pub fn noncentrality(g1: f64, sigma: f64) -> f64 {
    (2.0 * g1 * (1.0 - sigma * sigma)).sqrt() / sigma
}

/// `F_{g2|g1}(x) = 1 - Q1(s, sqrt(2x) / sigma)`.
pub fn cond_cdf_g2(x: f64, g1: f64, sigma: f64) -> Probability {
    assert!(sigma > 0.0 && sigma <= 1.0, "sigma = {sigma} not in (0, 1]");
    if x <= 0.0 {
        return Probability::ZERO;
    }
    let rho = (2.0 * x).sqrt() / sigma;
    Probability::clamped(marcum_tails(noncentrality(g1, sigma), rho).1)
}

/// How the conditional quantile `F_{g2|g1}^{-1}(eps)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileMethod {
    /// Root of the exact Marcum CDF.
    Exact,
    /// Closed-form inverse of the fitted `exp(-e^{I(s)} rho^{J(s)})` law.
    Fitted,
    /// `-sigma^2 ln(1 - eps) e^{g1 (1 - sigma^2) / sigma^2}`, from the
    /// `rho ~ sqrt(-2 ln(1 - eps)) e^{s^2/4}` inverse.
    Asymptotic,
}

impl QuantileMethod {
    pub fn label(self) -> &'static str {
        match self {
            QuantileMethod::Exact => "exact",
            QuantileMethod::Fitted => "fitted",
            QuantileMethod::Asymptotic => "asymptotic",
        }
    }
}

/// Gain `x` at which `F_{g2|g1}(x) = eps`, by the selected method.
pub fn inv_cond_cdf_g2(eps: Probability, g1: f64, sigma: f64, method: QuantileMethod) -> Result<f64> {
    let eps = Probability::open(eps.value())?.value();
    check_sigma(sigma)?;
    if g1.is_nan() || g1 < 0.0 {
        return Err(domain(format!("g1 = {g1} < 0")));
    }
    let s2 = sigma * sigma;
    let neg_log = -(-eps).ln_1p();
    match method {
        QuantileMethod::Exact => {
            let rho_sq = solve_rho_sq(noncentrality(g1, sigma), eps, MarcumTail::Lower)?;
            Ok(0.5 * s2 * rho_sq)
        }
        QuantileMethod::Fitted => {
            let s = noncentrality(g1, sigma);
            let base = neg_log / fit_scale_poly(s).exp();
            Ok(0.5 * s2 * base.powf(2.0 / fit_exponent_poly(s)))
        }
        QuantileMethod::Asymptotic => Ok(s2 * neg_log * (g1 * (1.0 - s2) / s2).exp()),
    }
}

/// `g1 ~ Exp(1)`.
pub fn sample_g1<R: Rng + ?Sized>(rng: &mut R) -> ChannelGain {
    ChannelGain(rng.sample(Exp1))
}

/// Draws `g2` given `g1` from the linear model: `h1` takes a uniform phase on
/// the circle of radius `sqrt(g1)`, `q` is unit-variance circular Gaussian.
pub fn sample_g2_given_g1<R: Rng + ?Sized>(rng: &mut R, g1: f64, sigma: f64) -> ChannelGain {
    let phase = rng.gen::<f64>() * 2.0 * PI;
    let qr: f64 = rng.sample(StandardNormal);
    let qi: f64 = rng.sample(StandardNormal);
    let a = (1.0 - sigma * sigma).sqrt() * g1.sqrt();
    let scale = sigma * std::f64::consts::FRAC_1_SQRT_2;
    let re = a * phase.cos() + scale * qr;
    let im = a * phase.sin() + scale * qi;
    ChannelGain(re * re + im * im)
}
