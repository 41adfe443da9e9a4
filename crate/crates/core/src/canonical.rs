//! Finite canonical form `ρ_h(C) = z₀ + Σ_{m=1}^{m̄} z_m h(A_m + B_m C(u_m, v_m))` of a
//! monotone payoff `L = g(K)`, and a direct evaluation from the law of `L`.
//!
//! Construction: collapse runs of equal payoffs into distinct levels. Level `m` starts at
//! curtate age `s_m`, and `{L ≥ level_m}` (increasing `g`) or `{L < level_{m-1}}`
//! (decreasing `g`) is the event `{K ≥ s_m}`, whose probability is affine in
//! `C(F̄(s_m), Ḡ(s_m))`. Terms whose point makes that probability identically zero are
//! dropped; for decreasing payoffs their weight moves into `z₀`.

use crate::contracts::{Monotonicity, PayoffSpec, Statistic};
use crate::copulas::Copula;
use crate::error::{Error, Result};
use crate::marginals::GompertzMarginal;
use crate::riskmeasures::{distortion_integral, Atom, Distortion};

/// Probabilities below this count as zero when truncating.
pub const ZERO_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub z0: f64,
    pub z: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub a: Vec<f64>,
    /// `±1`
    pub b: Vec<f64>,
    /// Curtate age at which each retained level starts.
    pub starts: Vec<usize>,
    pub statistic: Statistic,
    pub monotonicity: Monotonicity,
}

impl CanonicalForm {
    /// `m̄`
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn is_increasing(&self) -> bool {
        self.monotonicity == Monotonicity::Increasing
    }

    /// `Σ z_m`, the spread of the payoff over the retained terms.
    pub fn total_weight(&self) -> f64 {
        self.z.iter().sum()
    }

    /// `r_m = A_m + B_m c(u_m, v_m)`, clipped to `[0, 1]` against rounding.
    pub fn r_values(&self, c: &dyn Copula) -> Vec<f64> {
        (0..self.len())
            .map(|m| {
                let (u, v) = self.points[m];
                (self.a[m] + self.b[m] * c.eval(u, v)).clamp(0.0, 1.0)
            })
            .collect()
    }

    /// `θ_m = (r_m - A_m) / B_m`.
    pub fn theta(&self, m: usize, r: f64) -> f64 {
        (r - self.a[m]) / self.b[m]
    }

    /// `z₀ + Σ z_m h(r_m)` at a given value vector.
    pub fn evaluate_r(&self, h: &Distortion, r: &[f64]) -> f64 {
        self.z0 + self.z.iter().zip(r).map(|(z, &x)| z * h.h(x)).sum::<f64>()
    }

    /// Risk measure of `L` under `c` (copula or quasi-copula).
    pub fn evaluate(&self, h: &Distortion, c: &dyn Copula) -> f64 {
        self.evaluate_r(h, &self.r_values(c))
    }
}

/// `(A, B)` for each statistic/direction pair.
fn affine(statistic: Statistic, increasing: bool, u: f64, v: f64) -> (f64, f64) {
    match (increasing, statistic) {
        (true, Statistic::FirstDeath) => (0.0, 1.0),
        (true, Statistic::LastDeath) => (u + v, -1.0),
        (false, Statistic::FirstDeath) => (1.0, -1.0),
        (false, Statistic::LastDeath) => (1.0 - u - v, 1.0),
    }
}

pub fn build_canonical(spec: &PayoffSpec, x: &GompertzMarginal, y: &GompertzMarginal) -> Result<CanonicalForm> {
    let increasing = match spec.monotonicity {
        Monotonicity::Increasing => true,
        Monotonicity::Decreasing => false,
        Monotonicity::NonMonotone => return Err(Error::NonMonotonePayoff),
    };
    // distinct levels and the index where each begins
    let mut levels = vec![spec.levels[0]];
    let mut starts = vec![0usize];
    for (k, w) in spec.levels.windows(2).enumerate() {
        if w[1] != w[0] {
            levels.push(w[1]);
            starts.push(k + 1);
        }
    }

    let vanishes = |u: f64, v: f64| match spec.statistic {
        Statistic::FirstDeath => u <= ZERO_PROBABILITY || v <= ZERO_PROBABILITY,
        Statistic::LastDeath => u <= ZERO_PROBABILITY && v <= ZERO_PROBABILITY,
    };

    let mut form = CanonicalForm {
        z0: if increasing { levels[0] } else { *levels.last().unwrap() },
        z: Vec::new(),
        points: Vec::new(),
        a: Vec::new(),
        b: Vec::new(),
        starts: Vec::new(),
        statistic: spec.statistic,
        monotonicity: spec.monotonicity,
    };
    for m in 1..levels.len() {
        let s = starts[m];
        let (u, v) = (x.curtate_survival(s), y.curtate_survival(s));
        if vanishes(u, v) {
            if !increasing {
                // the remaining drops happen with certainty
                form.z0 = levels[m - 1];
            }
            break;
        }
        let (a, b) = affine(spec.statistic, increasing, u, v);
        form.z.push((levels[m] - levels[m - 1]).abs());
        form.points.push((u, v));
        form.a.push(a);
        form.b.push(b);
        form.starts.push(s);
    }
    Ok(form)
}

/// `P(K ≥ k)` for the payoff's statistic.
fn tail_of_statistic(statistic: Statistic, u: f64, v: f64, c: &dyn Copula) -> f64 {
    let joint = c.eval(u, v);
    match statistic {
        Statistic::FirstDeath => joint,
        Statistic::LastDeath => u + v - joint,
    }
}

/// Exact law of `L` as atoms, built from `P(K ≥ k)` at every curtate age.
pub fn payoff_law(spec: &PayoffSpec, x: &GompertzMarginal, y: &GompertzMarginal, c: &dyn Copula) -> Vec<Atom> {
    let top = spec.levels.len().max(x.horizon().max(y.horizon()) + 2);
    let tail = |k: usize| {
        tail_of_statistic(spec.statistic, x.curtate_survival(k), y.curtate_survival(k), c).clamp(0.0, 1.0)
    };
    let mut atoms = Vec::with_capacity(top);
    let mut upper = tail(0);
    for k in 0..top {
        let next = tail(k + 1);
        let p = (upper - next).max(0.0);
        if p > 0.0 {
            atoms.push((spec.level(k), p));
        }
        upper = next;
    }
    atoms
}

/// `∫ h(P(L > x)) dx` summed level by level from the law of `L`; independent of the
/// canonical construction.
pub fn direct_risk_oracle(
    spec: &PayoffSpec,
    x: &GompertzMarginal,
    y: &GompertzMarginal,
    c: &dyn Copula,
    h: &Distortion,
) -> Result<f64> {
    distortion_integral(&payoff_law(spec, x, y, c), h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{payoff_spec, Contract, ContractKind, Term};
    use crate::copulas::{Comonotone, Countermonotone, Independence};

    fn lives() -> (GompertzMarginal, GompertzMarginal) {
        (
            GompertzMarginal::with_max_age(65.0, 85.47, 10.45, 115.0).unwrap(),
            GompertzMarginal::with_max_age(62.0, 91.57, 8.13, 115.0).unwrap(),
        )
    }

    fn measures() -> [Distortion; 3] {
        [Distortion::Mean, Distortion::Var { alpha: 0.99 }, Distortion::Es { alpha: 0.975 }]
    }

    #[test]
    fn constant_payoff_is_degenerate() {
        let (x, y) = lives();
        let spec = PayoffSpec::new(Statistic::FirstDeath, vec![4.0; 10]).unwrap();
        let form = build_canonical(&spec, &x, &y).unwrap();
        assert_eq!((form.z0, form.len()), (4.0, 0));
        for h in measures() {
            assert_eq!(form.evaluate(&h, &Independence), 4.0);
            assert_eq!(direct_risk_oracle(&spec, &x, &y, &Independence, &h).unwrap(), 4.0);
        }
    }

    #[test]
    fn rejects_non_monotone() {
        let (x, y) = lives();
        let spec = PayoffSpec::new(Statistic::FirstDeath, vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(build_canonical(&spec, &x, &y), Err(Error::NonMonotonePayoff));
    }

    #[test]
    fn annuity_form_structure() {
        let (x, y) = lives();
        let c = Contract::level(ContractKind::JointLifeAnnuity, 1.0, 0.05, Term::WholeLife).unwrap();
        let form = build_canonical(&payoff_spec(&c, &x, &y).unwrap(), &x, &y).unwrap();
        let v: f64 = 1.0 / 1.05;
        assert_eq!(form.z0, 0.0);
        for m in 0..form.len() {
            let k = m + 1;
            assert_eq!(form.starts[m], k);
            assert!((form.z[m] - v.powi(k as i32)).abs() < 1e-13);
            assert_eq!(form.points[m], (x.curtate_survival(k), y.curtate_survival(k)));
            assert_eq!((form.a[m], form.b[m]), (0.0, 1.0));
        }
        // truncated where the older life's survival hits zero (ω = 50)
        assert_eq!(form.len(), 49);
        let price: f64 = (1..=60).map(|k| v.powi(k) * x.curtate_survival(k as usize) * y.curtate_survival(k as usize)).sum();
        assert!((form.evaluate(&Distortion::Mean, &Independence) - price).abs() < 1e-12);
    }

    #[test]
    fn last_survivor_insurance_tail_moves_into_z0() {
        let (x, y) = lives();
        let b = 3.0;
        let c = Contract::level(ContractKind::LastSurvivorInsurance, b, 0.05, Term::WholeLife).unwrap();
        let form = build_canonical(&payoff_spec(&c, &x, &y).unwrap(), &x, &y).unwrap();
        let v: f64 = 1.0 / 1.05;
        let bar = form.len() + 1;
        for m in 0..form.len() {
            let (u, w) = form.points[m];
            assert_eq!((form.a[m], form.b[m]), (1.0 - u - w, 1.0));
            let k = (m + 1) as i32;
            assert!((form.z[m] - b * (v.powi(k) - v.powi(k + 1))).abs() < 1e-14);
        }
        // ℓ for K∨ ≥ m̄∨ - 1 is b v^{m̄∨}
        assert!((form.z0 - b * v.powi(bar as i32)).abs() < 1e-14, "{} vs {}", form.z0, bar);
        assert_eq!(form.points.last().unwrap().0, 0.0);
    }

    #[test]
    fn plateaus_use_the_first_index_of_each_level() {
        let (x, y) = lives();
        let spec = PayoffSpec::new(Statistic::FirstDeath, vec![0.0, 0.0, 1.0, 1.0, 1.0, 3.0]).unwrap();
        let form = build_canonical(&spec, &x, &y).unwrap();
        assert_eq!(form.starts, vec![2, 5]);
        assert_eq!(form.z, vec![1.0, 2.0]);
        for c in [&Independence as &dyn Copula, &Comonotone, &Countermonotone] {
            for h in measures() {
                let a = form.evaluate(&h, c);
                let b = direct_risk_oracle(&spec, &x, &y, c, &h).unwrap();
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
        let spec = PayoffSpec::new(Statistic::LastDeath, vec![5.0, 5.0, 2.0, 2.0, 0.5]).unwrap();
        let form = build_canonical(&spec, &x, &y).unwrap();
        assert_eq!(form.starts, vec![2, 4]);
        for c in [&Independence as &dyn Copula, &Comonotone, &Countermonotone] {
            for h in measures() {
                let a = form.evaluate(&h, c);
                let b = direct_risk_oracle(&spec, &x, &y, c, &h).unwrap();
                assert!((a - b).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn arguments_stay_in_unit_interval() {
        let (x, y) = lives();
        let c = Contract::level(ContractKind::LastSurvivorAnnuity, 1.0, 0.05, Term::WholeLife).unwrap();
        let form = build_canonical(&payoff_spec(&c, &x, &y).unwrap(), &x, &y).unwrap();
        for m in 0..form.len() {
            let (u, v) = form.points[m];
            let (lo, hi) = ((u + v - 1.0).max(0.0), u.min(v));
            for t in 0..=100 {
                let c = lo + (hi - lo) * t as f64 / 100.0;
                let r = form.a[m] + form.b[m] * c;
                assert!((-1e-15..=1.0 + 1e-15).contains(&r));
            }
        }
    }
}
