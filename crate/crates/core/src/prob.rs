use std::fmt;

use crate::error::{domain, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(domain(format!("probability {value} not in [0, 1]")))
        }
    }

    /// Like [`Probability::new`] but rejects the endpoints as well.
    pub fn open(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(domain(format!("probability {value} not in (0, 1)")))
        }
    }

    /// Clamps into `[0, 1]`. Callers must not pass NaN.
    pub fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan(), "NaN probability");
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
