//! Special functions behind the outage formulas.

mod bessel;
mod lambert;
mod marcum;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use lambert::{lambert_w, WBranch};
pub use marcum::{
    fit_exponent_poly, fit_scale_poly, inv_marcum_q1_asymptotic, inv_marcum_q1_rho, marcum_p1,
    marcum_q1, marcum_q1_approx, MarcumTail,
};

pub(crate) use marcum::{marcum_tails, solve_rho_sq};
