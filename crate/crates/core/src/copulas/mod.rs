//! Copulas and quasi-copulas evaluated pointwise on the unit square.
//!
//! Every dependence model in the crate sits behind [`Copula`]. Concrete kinds are
//! registered by name in [`CopulaRegistry`] so configs and the CLI can select them at
//! runtime; the improved Fréchet bounds are quasi-copulas built programmatically from
//! [`tau_band_bounds`] and [`tankov_bounds`].

mod bounds;
mod gumbel;
mod registry;

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

pub use bounds::{tankov_bounds, tau_band_bounds, BoundSide, TankovBound, TauBand};
pub use gumbel::{gumbel_summaries, Gumbel, GumbelSummaries};
pub use registry::{CopulaFactory, CopulaRegistry, CopulaSpec};

/// A grounded, 1-Lipschitz function on `[0,1]^2` with uniform margins.
pub trait Copula: Send + Sync + fmt::Debug {
    fn eval(&self, u: f64, v: f64) -> f64;

    /// Short label used in CSV output.
    fn label(&self) -> String;

    /// `false` for pointwise bounds that are only known to be quasi-copulas.
    fn is_copula(&self) -> bool {
        true
    }

    /// One draw `(U, V)` from the copula, or `None` when the kind has no sampler.
    fn sample_pair(&self, _rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        None
    }
}

pub type SharedCopula = Arc<dyn Copula>;

/// Lower Fréchet–Hoeffding bound. `u + v - 1` can round one ulp above `min(u, v)`
/// when either argument is 1, hence the cap.
pub fn fh_lower(u: f64, v: f64) -> f64 {
    (u + v - 1.0).max(0.0).min(u.min(v))
}

/// Upper Fréchet–Hoeffding bound.
pub fn fh_upper(u: f64, v: f64) -> f64 {
    u.min(v)
}

pub(crate) fn uniform(rng: &mut dyn RngCore) -> f64 {
    // 53 random bits in [0, 1)
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Independence;

impl Copula for Independence {
    fn eval(&self, u: f64, v: f64) -> f64 {
        u * v
    }
    fn label(&self) -> String {
        "independence".into()
    }
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        Some((uniform(rng), uniform(rng)))
    }
}

/// `M(u, v) = min(u, v)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Comonotone;

impl Copula for Comonotone {
    fn eval(&self, u: f64, v: f64) -> f64 {
        fh_upper(u, v)
    }
    fn label(&self) -> String {
        "comonotone".into()
    }
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        let u = uniform(rng);
        Some((u, u))
    }
}

/// `W(u, v) = max(0, u + v - 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Countermonotone;

impl Copula for Countermonotone {
    fn eval(&self, u: f64, v: f64) -> f64 {
        fh_lower(u, v)
    }
    fn label(&self) -> String {
        "countermonotone".into()
    }
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        let u = uniform(rng);
        Some((u, 1.0 - u))
    }
}

/// Survival transform `C^(u, v) = u + v - 1 + C(1 - u, 1 - v)`.
#[derive(Debug, Clone)]
pub struct Survival {
    inner: SharedCopula,
}

impl Survival {
    pub fn new(inner: SharedCopula) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &SharedCopula {
        &self.inner
    }
}

impl Copula for Survival {
    fn eval(&self, u: f64, v: f64) -> f64 {
        let c = u + v - 1.0 + self.inner.eval(1.0 - u, 1.0 - v);
        c.clamp(fh_lower(u, v), fh_upper(u, v))
    }
    fn label(&self) -> String {
        format!("survival-{}", self.inner.label())
    }
    fn is_copula(&self) -> bool {
        self.inner.is_copula()
    }
    fn sample_pair(&self, rng: &mut dyn RngCore) -> Option<(f64, f64)> {
        self.inner.sample_pair(rng).map(|(u, v)| (1.0 - u, 1.0 - v))
    }
}

pub fn survival_transform(c: SharedCopula) -> SharedCopula {
    Arc::new(Survival::new(c))
}

/// Kendall's tau `1 - 4 ∫∫ ∂₁C ∂₂C du dv` by finite differences on a `grid_n × grid_n`
/// grid.
///
/// The partial derivatives are central differences at cell midpoints (averaged over the
/// two cell edges), so the discretisation error is `O(1/grid_n)`; for singular copulas
/// the error concentrates on cells crossed by the support.
pub fn kendalls_tau_numeric(c: &dyn Copula, grid_n: usize) -> f64 {
    let n = grid_n.max(1);
    let h = 1.0 / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let values: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&u| nodes.iter().map(|&v| c.eval(u, v)).collect())
        .collect();
    let mut integral = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d_u = 0.5 * ((values[i + 1][j] - values[i][j]) + (values[i + 1][j + 1] - values[i][j + 1]));
            let d_v = 0.5 * ((values[i][j + 1] - values[i][j]) + (values[i + 1][j + 1] - values[i + 1][j]));
            // (d_u / h) * (d_v / h) * h^2
            integral += d_u * d_v;
        }
    }
    1.0 - 4.0 * integral
}

#[cfg(test)]
pub(crate) mod testing {
    use super::Copula;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Groundedness, margins, monotonicity, 1-Lipschitz and the Fréchet–Hoeffding
    /// sandwich at `n` random points.
    pub fn assert_quasi_copula(c: &dyn Copula, n: usize, tol: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..n {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let x = c.eval(u, v);
            assert!(c.eval(u, 0.0).abs() <= tol && c.eval(0.0, v).abs() <= tol, "{}: grounded", c.label());
            assert!((c.eval(u, 1.0) - u).abs() <= tol, "{}: margin u at {u}", c.label());
            assert!((c.eval(1.0, v) - v).abs() <= tol, "{}: margin v at {v}", c.label());
            assert!(x >= super::fh_lower(u, v) - tol && x <= super::fh_upper(u, v) + tol, "{}: sandwich", c.label());
            let u2: f64 = u + (1.0 - u) * rng.random::<f64>();
            let v2: f64 = v + (1.0 - v) * rng.random::<f64>();
            let du = c.eval(u2, v) - x;
            let dv = c.eval(u, v2) - x;
            assert!(du >= -tol && du <= u2 - u + tol, "{}: Lipschitz/monotone in u", c.label());
            assert!(dv >= -tol && dv <= v2 - v + tol, "{}: Lipschitz/monotone in v", c.label());
        }
    }

    pub fn assert_two_increasing(c: &dyn Copula, n: usize, tol: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..n {
            let (a, b): (f64, f64) = (rng.random(), rng.random());
            let (c1, d1): (f64, f64) = (rng.random(), rng.random());
            let (u1, u2) = (a.min(b), a.max(b));
            let (v1, v2) = (c1.min(d1), c1.max(d1));
            let mass = c.eval(u2, v2) - c.eval(u1, v2) - c.eval(u2, v1) + c.eval(u1, v1);
            assert!(mass >= -tol, "{}: negative rectangle mass {mass}", c.label());
        }
    }
}
