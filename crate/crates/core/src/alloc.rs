//! First-round power allocation.
//!
//! For a given `P1` the long-run average power is
//! `Pbar(P1) = P1 + E[P2(g1)]`, with `P2` from [`crate::harq`] and the
//! expectation over `g1 ~ Exp(1)`. The outage stays at `eps` for every `P1`,
//! so minimising `Pbar` over `P1` is the whole optimisation.
//!
//! With the asymptotic quantile the expectation has the closed form
//! `Pbar = P1 + (c / m^2) P1 (e^{-a} - 1 + a)`, `a = m theta / P1`,
//! `m = 1 / sigma^2`, `c = -1 / (sigma^2 ln(1 - eps))`, minimised at
//! `P1 = -m theta / (W_{-1}((m^2/c - 1) / e) + 1)` when `m^2 / c < 1`.

use crate::channel::QuantileMethod;
use crate::error::{domain, Error, Result};
use crate::harq::{HarqConfig, P2Rule, Protocol};
use crate::numeric::{golden_section_min, integrate, log_grid};
use crate::specfn::{lambert_w, WBranch};

/// `g1` beyond this carries `e^{-60}` of the probability mass.
const G1_CAP: f64 = 60.0;
const QUAD_REL_TOL: f64 = 1e-8;
const SEARCH_LO: f64 = 1e-3;
const SEARCH_HI: f64 = 1e8;
const SEARCH_CEILING: f64 = 1e12;
const GRID_POINTS: usize = 200;
/// 1e-4 dB expressed in natural log units of power.
const LN_XTOL: f64 = 1e-4 * std::f64::consts::LN_10 / 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionMethod {
    /// Numerical minimisation of the quadrature objective.
    Numeric(QuantileMethod),
    /// The Lambert-W expression.
    ClosedForm,
}

impl SolutionMethod {
    pub fn label(self) -> &'static str {
        match self {
            SolutionMethod::Numeric(QuantileMethod::Exact) => "numeric-exact",
            SolutionMethod::Numeric(QuantileMethod::Fitted) => "numeric-fitted",
            SolutionMethod::Numeric(QuantileMethod::Asymptotic) => "numeric-asymptotic",
            SolutionMethod::ClosedForm => "closed-form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSolution {
    pub protocol: Protocol,
    pub method: SolutionMethod,
    pub p1_opt: f64,
    pub avg_power: f64,
    /// `1 / sigma^2`.
    pub m: f64,
    /// `-1 / (sigma^2 ln(1 - eps))`.
    pub c: f64,
    /// False when the grid audit found more than one local minimum. The
    /// reported optimum is then refined around the global grid minimum.
    pub unimodal: bool,
}

/// `(m, c)` for a given outage target and `sigma`.
pub fn closed_form_coefficients(eps: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    (1.0 / s2, -1.0 / (s2 * (-eps).ln_1p()))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("sigma = {sigma} not in (0, 1]")))
    }
}

/// Upper end of the `g1` range on which `P2` can be nonzero.
fn p2_support(cfg: &HarqConfig, method: QuantileMethod) -> f64 {
    let threshold = match (cfg.protocol, method) {
        (Protocol::Inr, QuantileMethod::Asymptotic) => cfg.theta1(),
        _ => cfg.theta(),
    };
    (threshold / cfg.p1).min(G1_CAP)
}

/// `Pbar(P1) = P1 + E[P2(g1)]` by adaptive quadrature, with `P1 = cfg.p1`.
pub fn avg_power_given_p1(cfg: &HarqConfig, sigma: f64, method: QuantileMethod) -> Result<f64> {
    let rule = P2Rule::new(*cfg, sigma, method)?;
    let mut failure: Option<Error> = None;
    let integrand = |g1: f64| match rule.analytic(g1) {
        Ok(p2) => p2 * (-g1).exp(),
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let result = integrate(integrand, 0.0, p2_support(cfg, method), QUAD_REL_TOL, 1e-10 * cfg.p1);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(cfg.p1 + result?.value)
}

/// `e^{-a} - 1 + a` without cancellation for small `a`.
fn exp_excess(a: f64) -> f64 {
    if a < 1.0 {
        // sum_{k>=2} (-a)^k / k!
        let mut term = 0.5 * a * a;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-17 * sum {
            k += 1.0;
            term *= -a / k;
            sum += term;
        }
        sum
    } else {
        (-a).exp_m1() + a
    }
}

/// Closed-form `Pbar(P1)` under the asymptotic quantile. INR uses `theta1`.
pub fn closed_form_avg_power(cfg: &HarqConfig, sigma: f64) -> f64 {
    let (m, c) = closed_form_coefficients(cfg.eps.value(), sigma);
    let a = m * cfg.analytic_threshold() / cfg.p1;
    cfg.p1 + c / (m * m) * cfg.p1 * exp_excess(a)
}

/// `dPbar/dP1` of the closed form; zero at the optimum.
pub fn stationarity_residual(cfg: &HarqConfig, sigma: f64) -> f64 {
    let (m, c) = closed_form_coefficients(cfg.eps.value(), sigma);
    let a = m * cfg.analytic_threshold() / cfg.p1;
    (-a).exp() * (1.0 + a) - (1.0 - m * m / c)
}

/// Minimiser of [`closed_form_avg_power`]. Fails with
/// [`Error::ClosedFormDomain`] when `m^2 / c >= 1`.
pub fn optimal_p1_closed_form(cfg: &HarqConfig, sigma: f64) -> Result<PowerSolution> {
    check_sigma(sigma)?;
    let (m, c) = closed_form_coefficients(cfg.eps.value(), sigma);
    let ratio = m * m / c;
    if ratio.is_nan() || ratio >= 1.0 {
        return Err(Error::ClosedFormDomain { ratio });
    }
    let w = lambert_w(WBranch::MinusOne, (ratio - 1.0) / std::f64::consts::E)?;
    let p1_opt = -m * cfg.analytic_threshold() / (w + 1.0);
    if !(p1_opt > 0.0 && p1_opt.is_finite()) {
        return Err(Error::Overflow("closed-form optimum"));
    }
    let avg_power = closed_form_avg_power(&cfg.with_p1(p1_opt), sigma);
    Ok(PowerSolution {
        protocol: cfg.protocol,
        method: SolutionMethod::ClosedForm,
        p1_opt,
        avg_power,
        m,
        c,
        unimodal: true,
    })
}

/// Numerically minimises [`avg_power_given_p1`] over `P1`.
///
/// A log grid over `[1e-3, 1e8]` (extended by decades up to `1e12` while the
/// minimum sits at the top edge) locates the global minimum; golden-section
/// search in `ln P1` then refines it to about 1e-4 dB.
pub fn optimal_p1_numeric(cfg: &HarqConfig, sigma: f64, method: QuantileMethod) -> Result<PowerSolution> {
    check_sigma(sigma)?;
    let objective = |p1: f64| avg_power_given_p1(&cfg.with_p1(p1), sigma, method);

    let mut grid = log_grid(SEARCH_LO, SEARCH_HI, GRID_POINTS);
    let mut values = grid.iter().map(|&p| objective(p)).collect::<Result<Vec<_>>>()?;
    let ratio = grid[1] / grid[0];
    while argmin(&values) == grid.len() - 1 {
        let next = grid[grid.len() - 1] * ratio;
        if next > SEARCH_CEILING {
            return Err(Error::Bracket(format!("average power still decreasing at P1 = {:e}", grid[grid.len() - 1])));
        }
        values.push(objective(next)?);
        grid.push(next);
    }
    let best = argmin(&values);
    let unimodal = count_local_minima(&values) <= 1;
    if !unimodal {
        log::warn!("average power is not unimodal in P1 ({} local minima); using the global grid minimum", count_local_minima(&values));
    }

    let lo = grid[best.saturating_sub(1)].ln();
    let hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let (t, avg_power) = golden_section_min(|t: f64| objective(t.exp()), lo, hi, LN_XTOL)?;
    let (p1_opt, avg_power) = if avg_power <= values[best] { (t.exp(), avg_power) } else { (grid[best], values[best]) };
    let (m, c) = closed_form_coefficients(cfg.eps.value(), sigma);
    Ok(PowerSolution { protocol: cfg.protocol, method: SolutionMethod::Numeric(method), p1_opt, avg_power, m, c, unimodal })
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid")
}

/// Interior grid points lower than both neighbours by more than quadrature noise.
fn count_local_minima(values: &[f64]) -> usize {
    let noise = |v: f64| 1e-7 * v.abs();
    let mut count = 0;
    for i in 1..values.len() - 1 {
        let v = values[i];
        if v + noise(v) < values[i - 1] && v + noise(v) < values[i + 1] {
            count += 1;
        }
    }
    if values[0] + noise(values[0]) < values[1] {
        count += 1;
    }
    count
}
