use std::f64::consts::PI;

use rand::RngCore;

use super::{fh_lower, fh_upper, uniform, Copula};
use crate::error::{Error, Result};

/// Arguments below this are treated as the grounded boundary.
const LOG_FLOOR: f64 = 1e-300;

/// Gumbel copula `C(u, v) = exp(-[(-ln u)^δ + (-ln v)^δ]^(1/δ))`, `δ >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gumbel {
    delta: f64,
}

impl Gumbel {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 1.0) {
            return Err(Error::Domain {
                value: delta,
                domain: "gumbel delta in [1, inf)",
            });
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Positive stable variable with Laplace transform `exp(-s^(1/δ))`
    /// (Chambers–Mallows–Stuck / Kanter representation).
    fn stable_frailty(&self, rng: &mut dyn RngCore) -> f64 {
        let alpha = 1.0 / self.delta;
        if alpha >= 1.0 {
            return 1.0;
        }
        let theta = PI * open_uniform(rng);
        let w = -open_uniform(rng).ln();
        let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
        let b = (((1.0 - alpha) * theta).sin() / w).powf((1.0 - alpha) / alpha);
        a * b
    }
}

fn open_uniform(rng: &mut dyn RngCore) -> f64 {
    loop {
        let u = uniform(rng);
        if u > 0.0 {
            return u;
        }
    }
}

impl Copula for Gumbel {
    fn eval(&self, u: f64, v: f64) -> f64 {
        if u <= LOG_FLOOR || v <= LOG_FLOOR {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        let s = (-u.ln()).powf(self.delta) + (-v.ln()).powf(self.delta);
        (-s.powf(1.0 / self.delta)).exp().clamp(fh_lower(u, v), fh_upper(u, v))
    }

    fn label(&self) -> String {
        format!("gumbel({})", self.delta)
    }

    // Marshall–Olkin: U_i = exp(-(E_i / V)^(1/δ)) with V positive stable.
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        let frailty = self.stable_frailty(rng);
        let e1 = -open_uniform(rng).ln();
        let e2 = -open_uniform(rng).ln();
        let inv = 1.0 / self.delta;
        Some(((-(e1 / frailty).powf(inv)).exp(), (-(e2 / frailty).powf(inv)).exp()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelSummaries {
    /// Kendall's tau `(δ - 1)/δ`.
    pub tau: f64,
    /// Upper tail dependence coefficient `2 - 2^(1/δ)`.
    pub lambda_upper: f64,
    /// Lower tail order `2^(1/δ)`.
    pub kappa_lower: f64,
}

pub fn gumbel_summaries(delta: f64) -> Result<GumbelSummaries> {
    let g = Gumbel::new(delta)?;
    let root = 2f64.powf(1.0 / g.delta);
    Ok(GumbelSummaries {
        tau: (g.delta - 1.0) / g.delta,
        lambda_upper: 2.0 - root,
        kappa_lower: root,
    })
}
