use std::f64::consts::E;

use crate::error::{domain, Error, Result};

/// Real branch of the Lambert W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBranch {
    /// `W_0`, defined on `[-1/e, inf)`, values `>= -1`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)`, values `<= -1`.
    MinusOne,
}

const INV_E: f64 = 1.0 / E;

/// Series about the branch point in `p = +-sqrt(2 (e x + 1))`.
fn branch_point_series(p: f64) -> f64 {
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

/// Solves `w e^w = x` on the requested branch by Halley iteration.
pub fn lambert_w(branch: WBranch, x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(domain(format!("lambert_w: {x} < -1/e")));
    }
    if branch == WBranch::MinusOne && x >= 0.0 {
        return Err(domain(format!("lambert_w(-1): {x} not in [-1/e, 0)")));
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    if branch == WBranch::Principal && x == 0.0 {
        return Ok(0.0);
    }
    let near_branch = E * x + 1.0;
    let mut w = match branch {
        _ if x < -0.25 => {
            let p = (2.0 * near_branch.max(0.0)).sqrt();
            let p = if branch == WBranch::Principal { p } else { -p };
            if p.abs() < 1e-3 {
                // Seven terms leave an error below p^7.
                return Ok(branch_point_series(p));
            }
            branch_point_series(p)
        }
        WBranch::Principal if x < 3.0 => x.ln_1p() * (1.0 - 0.25 * x.ln_1p() / (1.0 + x.ln_1p())),
        _ => {
            let l1 = if branch == WBranch::Principal { x.ln() } else { (-x).ln() };
            let l2 = if branch == WBranch::Principal { l1.ln() } else { (-l1).ln() };
            l1 - l2 + l2 / l1
        }
    };
    let mut last_step = f64::INFINITY;
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            return Ok(next);
        }
        // Near w = -1 the derivative vanishes and steps bottom out at the
        // roundoff level of f instead of reaching machine precision.
        if step.abs() >= last_step && step.abs() < 1e-8 * (1.0 + w.abs()) {
            return Ok(w);
        }
        last_step = step.abs();
        w = next;
    }
    Err(Error::NoConvergence { what: "Lambert W Halley iteration", iterations: 100 })
}
