//! Brute-force references for small instances, independent of the LPs.

use crate::bounds::Norm;
use crate::canonical::CanonicalForm;
use crate::copulas::{fh_lower, fh_upper, Copula};
use crate::riskmeasures::Distortion;

/// `(min, max)` of each measure over value vectors on a `step` lattice inside the
/// region. Exponential in `m̄`; meant for `m̄ <= 3`.
pub fn lattice_bounds(
    form: &CanonicalForm,
    c_ref: &dyn Copula,
    norm: Norm,
    eps: f64,
    hs: &[Distortion],
    step: f64,
) -> Vec<(f64, f64)> {
    let n = form.len();
    let reference: Vec<f64> = form.points.iter().map(|&(u, v)| c_ref.eval(u, v)).collect();
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (u, v) = form.points[i];
            let lo = fh_lower(u, v).max(reference[i] - eps);
            let hi = fh_upper(u, v).min(reference[i] + eps);
            let mut axis: Vec<f64> = (0..).map(|k| lo + k as f64 * step).take_while(|&t| t < hi).collect();
            axis.push(hi);
            axis
        })
        .collect();
    let mut walk = Walk {
        form,
        axes: &axes,
        reference: &reference,
        norm,
        eps,
        hs,
        theta: vec![0.0; n],
        best: vec![(f64::INFINITY, f64::NEG_INFINITY); hs.len()],
    };
    walk.descend(0, 0.0);
    walk.best
}

struct Walk<'a> {
    form: &'a CanonicalForm,
    axes: &'a [Vec<f64>],
    reference: &'a [f64],
    norm: Norm,
    eps: f64,
    hs: &'a [Distortion],
    theta: Vec<f64>,
    best: Vec<(f64, f64)>,
}

impl Walk<'_> {
    fn descend(&mut self, i: usize, used: f64) {
        let n = self.theta.len();
        if i == n {
            let r: Vec<f64> = (0..n).map(|j| self.form.a[j] + self.form.b[j] * self.theta[j]).collect();
            for (k, h) in self.hs.iter().enumerate() {
                let v = self.form.evaluate_r(h, &r);
                self.best[k].0 = self.best[k].0.min(v);
                self.best[k].1 = self.best[k].1.max(v);
            }
            return;
        }
        for k in 0..self.axes[i].len() {
            let t = self.axes[i][k];
            let d = (t - self.reference[i]).abs();
            if self.norm == Norm::L1 && used + d > self.eps + 1e-12 {
                continue;
            }
            if i > 0 {
                let (p, q) = (self.form.points[i - 1], self.form.points[i]);
                // both chains
                if t > self.theta[i - 1] || self.theta[i - 1] - t > (p.0 + p.1) - (q.0 + q.1) {
                    continue;
                }
            }
            self.theta[i] = t;
            self.descend(i + 1, used + d);
        }
    }
}
