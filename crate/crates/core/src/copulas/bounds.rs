//! Improved Fréchet–Hoeffding bounds.
//!
//! * Kendall-tau bands: for copulas with Kendall's tau `t`,
//!   `max(0, u+v-1, ½[(u+v) - √((u-v)² + 1 - t)]) <= C(u,v)
//!    <= min(u, v, ½[(u+v-1) + √((u+v-1)² + 1 + t)])`.
//! * Region-constrained bounds: when `C = Q` on a finite set `S'`,
//!   `B(u,v) = max(0, u+v-1, max_{(a,b)∈S'} Q(a,b) - (a-u)⁺ - (b-v)⁺)` and
//!   `A(u,v) = min(u, v, min_{(a,b)∈S'} Q(a,b) + (u-a)⁺ + (v-b)⁺)`.

use std::sync::Arc;

use super::{fh_lower, fh_upper, Comonotone, Copula, Countermonotone, SharedCopula};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl BoundSide {
    fn tag(self) -> &'static str {
        match self {
            BoundSide::Lower => "lower",
            BoundSide::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TauBand {
    tau: f64,
    side: BoundSide,
}

impl TauBand {
    pub fn new(tau: f64, side: BoundSide) -> Result<Self> {
        if !(-1.0..=1.0).contains(&tau) {
            return Err(Error::Domain {
                value: tau,
                domain: "kendall tau in [-1, 1]",
            });
        }
        Ok(Self { tau, side })
    }
}

impl Copula for TauBand {
    fn eval(&self, u: f64, v: f64) -> f64 {
        match self.side {
            BoundSide::Lower => {
                let band = 0.5 * ((u + v) - ((u - v).powi(2) + 1.0 - self.tau).sqrt());
                fh_lower(u, v).max(band)
            }
            BoundSide::Upper => {
                let s = u + v - 1.0;
                let band = 0.5 * (s + (s * s + 1.0 + self.tau).sqrt());
                fh_upper(u, v).min(band)
            }
        }
    }

    fn label(&self) -> String {
        format!("tau-{}({})", self.side.tag(), self.tau)
    }
}

/// Pointwise bounds for copulas with Kendall's tau equal to `tau`.
pub fn tau_band_bounds(tau: f64) -> Result<(TauBand, TauBand)> {
    Ok((TauBand::new(tau, BoundSide::Lower)?, TauBand::new(tau, BoundSide::Upper)?))
}

#[derive(Debug, Clone)]
pub struct TankovBound {
    /// `(a, b, Q(a, b))` for every constrained point.
    anchors: Vec<(f64, f64, f64)>,
    side: BoundSide,
}

impl TankovBound {
    pub fn anchors(&self) -> &[(f64, f64, f64)] {
        &self.anchors
    }
}

impl Copula for TankovBound {
    fn eval(&self, u: f64, v: f64) -> f64 {
        match self.side {
            BoundSide::Lower => self
                .anchors
                .iter()
                .map(|&(a, b, q)| q - (a - u).max(0.0) - (b - v).max(0.0))
                .fold(fh_lower(u, v), f64::max),
            BoundSide::Upper => self
                .anchors
                .iter()
                .map(|&(a, b, q)| q + (u - a).max(0.0) + (v - b).max(0.0))
                .fold(fh_upper(u, v), f64::min),
        }
    }

    fn label(&self) -> String {
        format!("tankov-{}", self.side.tag())
    }

    fn is_copula(&self) -> bool {
        self.side == BoundSide::Lower
    }
}

/// Bounds for copulas that agree with `q` on `points`; plain `(W, M)` when `points` is
/// empty.
pub fn tankov_bounds(points: &[(f64, f64)], q: &dyn Copula) -> (SharedCopula, SharedCopula) {
    if points.is_empty() {
        return (Arc::new(Countermonotone), Arc::new(Comonotone));
    }
    let anchors: Vec<(f64, f64, f64)> = points.iter().map(|&(a, b)| (a, b, q.eval(a, b))).collect();
    (
        Arc::new(TankovBound {
            anchors: anchors.clone(),
            side: BoundSide::Lower,
        }),
        Arc::new(TankovBound {
            anchors,
            side: BoundSide::Upper,
        }),
    )
}
