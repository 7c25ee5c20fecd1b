//! First-order Marcum Q function
//! `Q1(s, rho) = int_rho^inf t exp(-(t^2 + s^2)/2) I_0(s t) dt`, its complement,
//! a fitted closed-form approximation, and inverses in `rho`.

use super::bessel::{scaled_bessel_i_weighted, scaled_i0_asymptotic};
use crate::error::{Error, Result};
use crate::numeric::{brent_root, integrate};
use crate::prob::Probability;

/// Above this value of `s * rho` the Bessel series needs thousands of terms;
/// the tail is integrated directly with the asymptotic `I_0` instead.
const LARGE_ARGUMENT: f64 = 2500.0;
/// Half-width of the window around `s` outside which the density is below
/// `exp(-39^2 / 2)`.
const WINDOW: f64 = 39.0;
/// Below `rho^2 / 2 = SMALL_LOWER` (with `rho > s`) the lower tail is summed
/// directly rather than as `1 - Q1`.
const SMALL_LOWER: f64 = 1.0;

/// Which tail of the Rician-type distribution a value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarcumTail {
    /// `Q1(s, rho)`, the mass above `rho`.
    Upper,
    /// `1 - Q1(s, rho)`, the mass below `rho`.
    Lower,
}

/// Returns `(Q1, 1 - Q1)` with each side computed directly when it is the
/// small one, so both keep full relative accuracy.
pub(crate) fn marcum_tails(s: f64, rho: f64) -> (f64, f64) {
    assert!(!s.is_nan() && !rho.is_nan(), "marcum_q1: NaN argument");
    let s = s.abs();
    if rho <= 0.0 {
        return (1.0, 0.0);
    }
    if rho.is_infinite() {
        return (0.0, 1.0);
    }
    if s == 0.0 {
        let h = 0.5 * rho * rho;
        return ((-h).exp(), -(-h).exp_m1());
    }
    let xi = s * rho;
    if xi > LARGE_ARGUMENT {
        return tails_by_quadrature(s, rho);
    }
    if rho > s && rho * rho <= 2.0 * SMALL_LOWER {
        let p = lower_tail_series(s, rho);
        return (1.0 - p, p);
    }
    let envelope = (-0.5 * (s - rho) * (s - rho)).exp();
    if rho > s {
        // Q1 = e^{-(s-rho)^2/2} sum_{k>=0} (s/rho)^k e^{-xi} I_k(xi)
        let (from0, _) = scaled_bessel_i_weighted(xi, s / rho);
        let q = (envelope * from0).min(1.0);
        (q, 1.0 - q)
    } else {
        // 1 - Q1 = e^{-(s-rho)^2/2} sum_{k>=1} (rho/s)^k e^{-xi} I_k(xi)
        let (_, from1) = scaled_bessel_i_weighted(xi, rho / s);
        let p = (envelope * from1).min(1.0);
        (1.0 - p, p)
    }
}

/// `1 - Q1` as a Poisson(s^2/2) mixture of regularised lower gamma
/// functions `P(k + 1, rho^2/2)`, each summed from its upper terms so every
/// addition is positive.
fn lower_tail_series(s: f64, rho: f64) -> f64 {
    const TERMS: usize = 48;
    let a = 0.5 * s * s;
    let h = 0.5 * rho * rho;
    let mut t = [0.0; TERMS + 2];
    t[0] = (-h).exp();
    for j in 1..TERMS + 2 {
        t[j] = t[j - 1] * h / j as f64;
    }
    let mut tails = [0.0; TERMS + 1];
    let mut acc = 0.0;
    for k in (0..=TERMS).rev() {
        acc += t[k + 1];
        tails[k] = acc;
    }
    let mut weight = (-a).exp();
    let mut p = 0.0;
    for (k, tail) in tails.iter().enumerate() {
        p += weight * tail;
        weight *= a / (k + 1) as f64;
    }
    p
}

fn tails_by_quadrature(s: f64, rho: f64) -> (f64, f64) {
    let density = |t: f64| {
        let d = t - s;
        t * (-0.5 * d * d).exp() * scaled_i0_asymptotic(t * s)
    };
    let integral = |a: f64, b: f64| {
        integrate(density, a, b, 1e-13, 1e-300)
            .map(|r| r.value)
            .expect("smooth bounded integrand")
    };
    if rho > s {
        let q = integral(rho, rho + WINDOW).min(1.0);
        (q, 1.0 - q)
    } else {
        let lo = (s - WINDOW).max(0.0);
        let p = if lo >= rho { 0.0 } else { integral(lo, rho).min(1.0) };
        (1.0 - p, p)
    }
}

/// First-order Marcum Q function `Q1(s, rho)` for `s, rho >= 0`.
pub fn marcum_q1(s: f64, rho: f64) -> Probability {
    Probability::clamped(marcum_tails(s, rho).0)
}

/// `1 - Q1(s, rho)`, accurate when small.
pub fn marcum_p1(s: f64, rho: f64) -> Probability {
    Probability::clamped(marcum_tails(s, rho).1)
}

/// Quartic in the exponent scale of the fitted approximation.
pub fn fit_scale_poly(s: f64) -> f64 {
    -0.840 + s * (0.327 + s * (-0.740 + s * (0.083 - 0.004 * s)))
}

/// Quartic in the power of `rho` of the fitted approximation.
pub fn fit_exponent_poly(s: f64) -> f64 {
    2.174 + s * (-0.592 + s * (0.593 + s * (-0.092 + 0.005 * s)))
}

/// Fitted approximation `Q1(s, rho) ~ exp(-e^{I(s)} rho^{J(s)})` with the
/// quartics [`fit_scale_poly`] and [`fit_exponent_poly`], clamped to `[0, 1]`.
pub fn marcum_q1_approx(s: f64, rho: f64) -> Probability {
    if rho <= 0.0 {
        return Probability::ONE;
    }
    let v = (-fit_scale_poly(s).exp() * rho.powf(fit_exponent_poly(s))).exp();
    Probability::clamped(v)
}

/// Solves for `rho^2` such that the chosen tail of `Q1(s, .)` equals
/// `target` in `(0, 1)`. Works in `rho^2`, where the lower tail is close to
/// linear near the origin.
pub(crate) fn solve_rho_sq(s: f64, target: f64, tail: MarcumTail) -> Result<f64> {
    debug_assert!(target > 0.0 && target < 1.0);
    let s = s.abs();
    if s == 0.0 {
        return Ok(match tail {
            MarcumTail::Upper => -2.0 * target.ln(),
            MarcumTail::Lower => -2.0 * (-target).ln_1p(),
        });
    }
    // Increasing in y for both tails.
    let g = |y: f64| {
        let (q, p) = marcum_tails(s, y.max(0.0).sqrt());
        match tail {
            MarcumTail::Lower => p - target,
            MarcumTail::Upper => target - q,
        }
    };
    let guess = match tail {
        MarcumTail::Lower => {
            let small = -2.0 * (-target).ln_1p() * (0.5 * s * s).min(600.0).exp();
            small.min((s + 10.0) * (s + 10.0))
        }
        MarcumTail::Upper => {
            let r = s + (-2.0 * target.ln()).sqrt();
            r * r
        }
    };
    let mut lo = 0.0;
    let mut g_lo = g(0.0);
    let mut hi = guess.max(1e-300);
    let mut g_hi = g(hi);
    let mut doublings = 0;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 4.0;
        g_hi = g(hi);
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::NoConvergence { what: "Marcum inverse bracket", iterations: doublings });
        }
    }
    brent_root(g, lo, hi, g_lo, g_hi, 1e-300, 200)
}

/// `rho` such that `Q1(s, rho) = p`, for `p` in `(0, 1)`.
pub fn inv_marcum_q1_rho(s: f64, p: Probability) -> Result<f64> {
    let p = Probability::open(p.value())?.value();
    let y = if p <= 0.5 {
        solve_rho_sq(s, p, MarcumTail::Upper)?
    } else {
        solve_rho_sq(s, 1.0 - p, MarcumTail::Lower)?
    };
    Ok(y.sqrt())
}

/// Moderate/large-`s` approximation to `rho` solving `Q1(s, rho) = 1 - eps`:
/// `sqrt(-2 ln(1 - eps)) * e^{s^2 / 4}`.
pub fn inv_marcum_q1_asymptotic(s: f64, eps: Probability) -> f64 {
    (-2.0 * (-eps.value()).ln_1p()).sqrt() * (0.25 * s * s).exp()
}
