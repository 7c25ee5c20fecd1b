use crate::error::{domain, Error, Result};

/// `e^{-x} I_k(x)` for `k = 0..=kmax` and `x > 0`.
///
/// Miller's backward recurrence `I_{k-1} = (2k/x) I_k + I_{k+1}`, normalised
/// with the generating-function identity `e^{-x} (I_0 + 2 sum_{k>=1} I_k) = 1`.
/// The start index sits far enough past the bulk of the sequence (which
/// falls off like `exp(-k^2 / 2x)`) that the normalisation sum is complete.
pub(crate) fn scaled_bessel_i_seq(x: f64, kmax: usize) -> Vec<f64> {
    debug_assert!(x > 0.0 && x.is_finite());
    const RESCALE_AT: f64 = 1e250;
    let start = kmax + (10.0 * x.sqrt()).ceil() as usize + 40;
    let mut out = vec![0.0; kmax + 1];
    let mut upper = 0.0; // I_{k+1}
    let mut cur = 1e-280; // I_k, arbitrary scale
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        sum += cur;
        let lower = (2.0 * k as f64 / x) * cur + upper;
        upper = cur;
        cur = lower;
        if cur > RESCALE_AT {
            cur /= RESCALE_AT;
            upper /= RESCALE_AT;
            sum /= RESCALE_AT;
            if k <= kmax {
                for v in &mut out[k..] {
                    *v /= RESCALE_AT;
                }
            }
        }
    }
    let norm = cur + 2.0 * sum;
    out[0] = cur;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Weighted sums `(sum_{k>=0} r^k e^{-x} I_k(x), sum_{k>=1} r^k e^{-x} I_k(x))`
/// for `0 <= r <= 1`, accumulated in Horner form during the same backward
/// recurrence so no sequence is stored.
pub(crate) fn scaled_bessel_i_weighted(x: f64, r: f64) -> (f64, f64) {
    debug_assert!(x > 0.0 && x.is_finite() && (0.0..=1.0).contains(&r));
    const RESCALE_AT: f64 = 1e250;
    let start = (10.0 * x.sqrt()).ceil() as usize + 40;
    let mut upper = 0.0;
    let mut cur = 1e-280;
    let mut sum = 0.0;
    let mut horner = 0.0; // sum_{j>=k} r^{j-k} I_j
    for k in (1..=start).rev() {
        sum += cur;
        horner = cur + r * horner;
        let lower = (2.0 * k as f64 / x) * cur + upper;
        upper = cur;
        cur = lower;
        if cur > RESCALE_AT {
            cur /= RESCALE_AT;
            upper /= RESCALE_AT;
            sum /= RESCALE_AT;
            horner /= RESCALE_AT;
        }
    }
    let norm = cur + 2.0 * sum;
    ((cur + r * horner) / norm, r * horner / norm)
}

/// `e^{-z} I_0(z)` from the large-argument asymptotic series. Accurate to
/// machine precision for `z >= 200`.
pub(crate) fn scaled_i0_asymptotic(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (8.0 * k as f64 * z);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Exponentially scaled modified Bessel function `e^{-x} I_n(x)`, `x >= 0`.
pub fn bessel_i_scaled(n: u32, x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain(format!("bessel_i: x = {x} must be finite and >= 0")));
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok(scaled_bessel_i_seq(x, n as usize)[n as usize])
}

/// Modified Bessel function of the first kind `I_n(x)`, `x >= 0`.
pub fn bessel_i(n: u32, x: f64) -> Result<f64> {
    let scaled = bessel_i_scaled(n, x)?;
    if scaled == 0.0 {
        return Ok(0.0);
    }
    let v = if x < 700.0 { scaled * x.exp() } else { (x + scaled.ln()).exp() };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("bessel_i"))
    }
}
