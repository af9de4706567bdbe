use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on log-scale comparisons.
const LOG_SLACK: f64 = 1e-12;

/// A number in `(0, 1]` stored as `ln(-ln x)`.
///
/// Values like `theta^(2^300)` underflow binary64 and even their logarithm
/// overflows; the double logarithm stays finite. `1` is stored as `-inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tiny {
    loglog: f64,
}

impl Tiny {
    pub const ONE: Tiny = Tiny { loglog: f64::NEG_INFINITY };

    pub fn from_value(x: f64) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::InvalidParameter(format!("expected a value in (0, 1], got {x}")));
        }
        Self::from_ln(x.ln())
    }

    /// From `ln x <= 0`.
    pub fn from_ln(ln_x: f64) -> Result<Self> {
        if ln_x.is_nan() || ln_x > 0.0 || ln_x == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("expected a finite ln x <= 0, got {ln_x}")));
        }
        Ok(Tiny { loglog: (-ln_x).ln() })
    }

    /// From `ln(-ln x)`.
    pub fn from_loglog(loglog: f64) -> Result<Self> {
        if loglog.is_nan() || loglog == f64::INFINITY {
            return Err(Error::InvalidParameter(format!("invalid double logarithm {loglog}")));
        }
        Ok(Tiny { loglog })
    }

    pub fn loglog(&self) -> f64 {
        self.loglog
    }

    /// `ln x`; `-inf` once it overflows.
    pub fn ln(&self) -> f64 {
        -self.loglog.exp()
    }

    /// `x` itself; `0` once it underflows.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    /// Compares `x` against the number whose logarithm is `ln_y`, treating
    /// values within a relative `1e-12` on the double-log scale as equal.
    pub fn cmp_ln(&self, ln_y: f64) -> Ordering {
        if ln_y >= 0.0 {
            return if self.loglog == f64::NEG_INFINITY && ln_y == 0.0 { Ordering::Equal } else { Ordering::Less };
        }
        if ln_y == f64::NEG_INFINITY {
            return Ordering::Greater;
        }
        let other = (-ln_y).ln();
        let slack = LOG_SLACK * other.abs().max(1.0);
        // larger double log means a smaller number
        if self.loglog > other + slack {
            Ordering::Less
        } else if self.loglog < other - slack {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }

    /// `x <= y` for `y = exp(ln_y)`, up to the comparison slack.
    pub fn le_ln(&self, ln_y: f64) -> bool {
        self.cmp_ln(ln_y) != Ordering::Greater
    }

    pub fn ge_ln(&self, ln_y: f64) -> bool {
        self.cmp_ln(ln_y) != Ordering::Less
    }

    /// `x^k` for `k > 0` given as `ln k`.
    pub fn pow_ln(&self, ln_k: f64) -> Tiny {
        Tiny { loglog: self.loglog + ln_k }
    }
}
