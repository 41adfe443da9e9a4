//! Truncated Gompertz lifetime laws.
//!
//! The untruncated law for a life aged `t` with mode `m` and dispersion `sigma` has cdf
//!
//! ```text
//! F~(x) = 1 - exp[ exp((t - m)/sigma) * (1 - exp(x/sigma)) ],   x >= 0
//! ```
//!
//! and the truncated law renormalises it on `[0, omega]`: `F(x) = F~(x) / F~(omega)`.
//! All evaluations go through `exp_m1`/`ln_1p` so that survival probabilities close to
//! one keep full relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Remaining-lifetime law of one insured, in years from the start of the contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzMarginal {
    entry_age: f64,
    mode: f64,
    dispersion: f64,
    max_lifetime: f64,
}

impl GompertzMarginal {
    pub fn new(entry_age: f64, mode: f64, dispersion: f64, max_lifetime: f64) -> Result<Self> {
        if !(entry_age.is_finite() && entry_age >= 0.0) {
            return Err(invalid("entry_age", format!("must be finite and >= 0, got {entry_age}")));
        }
        if !mode.is_finite() {
            return Err(invalid("mode", format!("must be finite, got {mode}")));
        }
        if !(dispersion.is_finite() && dispersion > 0.0) {
            return Err(invalid("dispersion", format!("must be > 0, got {dispersion}")));
        }
        if !(max_lifetime.is_finite() && max_lifetime > 0.0) {
            return Err(invalid("max_lifetime", format!("must be > 0, got {max_lifetime}")));
        }
        Ok(Self {
            entry_age,
            mode,
            dispersion,
            max_lifetime,
        })
    }

    /// Life aged `entry_age` whose lifetime is capped at the absolute age `max_age`.
    pub fn with_max_age(entry_age: f64, mode: f64, dispersion: f64, max_age: f64) -> Result<Self> {
        Self::new(entry_age, mode, dispersion, max_age - entry_age)
    }

    pub fn entry_age(&self) -> f64 {
        self.entry_age
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    pub fn max_lifetime(&self) -> f64 {
        self.max_lifetime
    }

    /// Smallest integer `k` with `survival(k) == 0`.
    pub fn horizon(&self) -> usize {
        self.max_lifetime.ceil() as usize
    }

    fn scale(&self) -> f64 {
        ((self.entry_age - self.mode) / self.dispersion).exp()
    }

    // exp(-scale * (exp(x/sigma) - 1)) = 1 - F~(x)
    fn untruncated_survival(&self, x: f64) -> f64 {
        (-self.scale() * (x / self.dispersion).exp_m1()).exp()
    }

    /// `P(X > x)`; 1 below zero and 0 beyond the maximum lifetime.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= self.max_lifetime {
            return 0.0;
        }
        let s_x = self.untruncated_survival(x);
        let s_w = self.untruncated_survival(self.max_lifetime);
        // (F~(w) - F~(x)) / F~(w)
        ((s_x - s_w) / (1.0 - s_w)).clamp(0.0, 1.0)
    }

    /// Closed-form inverse of [`survival`](Self::survival).
    pub fn quantile_survival(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain {
                value: p,
                domain: "[0, 1]",
            });
        }
        if p == 1.0 {
            return Ok(0.0);
        }
        if p == 0.0 {
            return Ok(self.max_lifetime);
        }
        // F~(x) = (1 - p) F~(w)  =>  scale * expm1(x/sigma) = -ln(1 - (1 - p) F~(w))
        let cdf_w = -(-self.scale() * (self.max_lifetime / self.dispersion).exp_m1()).exp_m1();
        let hazard = -(-(1.0 - p) * cdf_w).ln_1p();
        let x = self.dispersion * (hazard / self.scale()).ln_1p();
        Ok(x.clamp(0.0, self.max_lifetime))
    }

    /// `P(K >= k)` for the curtate lifetime `K = floor(X)`.
    pub fn curtate_survival(&self, k: usize) -> f64 {
        self.survival(k as f64)
    }
}
