//! Two-life contract catalog: payoff sequences, monotonicity, copula-linear prices and
//! level calibration.
//!
//! Payments fall at integer times. With `c_j = b_j v_j^j` an insurance pays
//! `c_{n ∧ (K+1)}`, so a term-`n` insurance still pays `c_n` when the relevant death
//! happens after year `n - 1`. Annuities pay `Σ_{j ≤ n ∧ K} a_j v_j^j`.

use serde::{Deserialize, Serialize};

use crate::copulas::Copula;
use crate::error::{invalid, Error, Result};
use crate::marginals::GompertzMarginal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractKind {
    JointLifeAnnuity,
    LastSurvivorAnnuity,
    JointLifeInsurance,
    LastSurvivorInsurance,
    ReversionaryAnnuity,
    WidowsPension,
}

impl ContractKind {
    pub const ALL: [ContractKind; 6] = [
        ContractKind::JointLifeAnnuity,
        ContractKind::LastSurvivorAnnuity,
        ContractKind::JointLifeInsurance,
        ContractKind::LastSurvivorInsurance,
        ContractKind::ReversionaryAnnuity,
        ContractKind::WidowsPension,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ContractKind::JointLifeAnnuity => "joint_life_annuity",
            ContractKind::LastSurvivorAnnuity => "last_survivor_annuity",
            ContractKind::JointLifeInsurance => "joint_life_insurance",
            ContractKind::LastSurvivorInsurance => "last_survivor_insurance",
            ContractKind::ReversionaryAnnuity => "reversionary_annuity",
            ContractKind::WidowsPension => "widows_pension",
        }
    }

    pub fn is_insurance(&self) -> bool {
        matches!(self, ContractKind::JointLifeInsurance | ContractKind::LastSurvivorInsurance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    WholeLife,
    Years(usize),
}

/// A contract on lives `X` and `Y`. `amounts` are the `a_k` (annuities) or `b_k`
/// (insurances) for `k = 1, 2, ...`; `rates` are the annual rates `i_k`. Both schedules
/// repeat their last entry beyond their length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contract {
    pub kind: ContractKind,
    pub term: Term,
    pub amounts: Vec<f64>,
    pub rates: Vec<f64>,
}

impl Contract {
    pub fn new(kind: ContractKind, term: Term, amounts: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let c = Self {
            kind,
            term,
            amounts,
            rates,
        };
        c.validate()?;
        Ok(c)
    }

    /// Constant amount and constant rate.
    pub fn level(kind: ContractKind, amount: f64, rate: f64, term: Term) -> Result<Self> {
        Self::new(kind, term, vec![amount], vec![rate])
    }

    pub fn validate(&self) -> Result<()> {
        if self.amounts.is_empty() {
            return Err(invalid("amounts", "schedule must have at least one entry"));
        }
        if self.rates.is_empty() {
            return Err(invalid("rates", "schedule must have at least one entry"));
        }
        if let Some(a) = self.amounts.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(invalid("amounts", format!("amounts must be finite and >= 0, got {a}")));
        }
        if let Some(i) = self.rates.iter().find(|i| !(i.is_finite() && **i > 0.0)) {
            return Err(invalid("rates", format!("annual rates must be > 0, got {i}")));
        }
        if self.term == Term::Years(0) {
            return Err(invalid("term", "term must be at least one year"));
        }
        Ok(())
    }

    /// Same contract with every amount multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amounts: self.amounts.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }

    /// Policy term in years; whole-life uses the longer lifespan bound.
    pub fn term_years(&self, x: &GompertzMarginal, y: &GompertzMarginal) -> usize {
        match self.term {
            Term::Years(n) => n,
            Term::WholeLife => x.horizon().max(y.horizon()).max(1),
        }
    }

    fn amount(&self, k: usize) -> f64 {
        self.amounts[(k - 1).min(self.amounts.len() - 1)]
    }

    fn discount(&self, k: usize) -> f64 {
        let i = self.rates[(k - 1).min(self.rates.len() - 1)];
        (1.0 + i).recip().powi(k as i32)
    }

    /// `a_k v_k^k` or `b_k v_k^k`, `k >= 1`.
    pub fn discounted(&self, k: usize) -> f64 {
        self.amount(k) * self.discount(k)
    }

    /// Cumulative annuity value `Σ_{j=1}^{n ∧ k} a_j v_j^j` for every `k = 0..=len`.
    fn annuity_values(&self, n: usize, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..=len {
            if k <= n {
                acc += self.discounted(k);
            }
            out.push(acc);
        }
        out
    }

    /// `c_{n ∧ (k+1)}` for every `k = 0..=len`.
    fn insurance_values(&self, n: usize, len: usize) -> Vec<f64> {
        (0..=len).map(|k| self.discounted((k + 1).min(n))).collect()
    }

    /// Payoff as a function of the curtate lifetimes `(K_X, K_Y)`.
    pub fn payoff_fn(&self, x: &GompertzMarginal, y: &GompertzMarginal) -> impl Fn(usize, usize) -> f64 {
        let n = self.term_years(x, y);
        let len = lattice_len(n, x, y);
        let kind = self.kind;
        let values = if kind.is_insurance() {
            self.insurance_values(n, len)
        } else {
            self.annuity_values(n, len)
        };
        move |kx: usize, ky: usize| {
            let at = |k: usize| values[k.min(len)];
            let (lo, hi) = (kx.min(ky), kx.max(ky));
            match kind {
                ContractKind::JointLifeAnnuity | ContractKind::JointLifeInsurance => at(lo),
                ContractKind::LastSurvivorAnnuity | ContractKind::LastSurvivorInsurance => at(hi),
                ContractKind::ReversionaryAnnuity => at(hi) - at(lo),
                ContractKind::WidowsPension => at(kx) - at(lo),
            }
        }
    }
}

/// Largest curtate lifetime that needs its own payoff entry.
fn lattice_len(n: usize, x: &GompertzMarginal, y: &GompertzMarginal) -> usize {
    n.max(x.horizon()).max(y.horizon()) + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `K∧ = min(K_X, K_Y)`
    FirstDeath,
    /// `K∨ = max(K_X, K_Y)`
    LastDeath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone,
}

/// Payoff `L = g(K)` for a single statistic `K`, with `ℓ_k = g(k)` listed for
/// `k = 0..levels.len()` and held constant afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    pub statistic: Statistic,
    pub levels: Vec<f64>,
    pub monotonicity: Monotonicity,
}

impl PayoffSpec {
    pub fn new(statistic: Statistic, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Empty("payoff levels"));
        }
        if let Some(l) = levels.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(invalid("levels", format!("payoffs must be finite and >= 0, got {l}")));
        }
        let monotonicity = classify(&levels);
        Ok(Self {
            statistic,
            levels,
            monotonicity,
        })
    }

    pub fn level(&self, k: usize) -> f64 {
        self.levels[k.min(self.levels.len() - 1)]
    }
}

/// Exact-comparison scan; a constant sequence counts as increasing.
pub fn classify(levels: &[f64]) -> Monotonicity {
    let up = levels.windows(2).all(|w| w[0] <= w[1]);
    let down = levels.windows(2).all(|w| w[0] >= w[1]);
    match (up, down) {
        (true, _) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        _ => Monotonicity::NonMonotone,
    }
}

pub fn payoff_spec(contract: &Contract, x: &GompertzMarginal, y: &GompertzMarginal) -> Result<PayoffSpec> {
    let n = contract.term_years(x, y);
    let len = lattice_len(n, x, y);
    let (statistic, levels) = match contract.kind {
        ContractKind::JointLifeAnnuity => (Statistic::FirstDeath, contract.annuity_values(n, len)),
        ContractKind::LastSurvivorAnnuity => (Statistic::LastDeath, contract.annuity_values(n, len)),
        ContractKind::JointLifeInsurance => (Statistic::FirstDeath, contract.insurance_values(n, len)),
        ContractKind::LastSurvivorInsurance => (Statistic::LastDeath, contract.insurance_values(n, len)),
        other => return Err(Error::NoSingleStatisticPayoff(other.name())),
    };
    PayoffSpec::new(statistic, levels)
}

/// Price written as `c₀ + Σ_m c_m C(u_m, v_m)`, valid for every copula `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceLinearForm {
    pub c0: f64,
    pub coefficients: Vec<f64>,
    /// `(F̄(k), Ḡ(k))`, nonincreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
}

impl PriceLinearForm {
    pub fn evaluate(&self, c: &dyn Copula) -> f64 {
        self.c0
            + self
                .coefficients
                .iter()
                .zip(&self.points)
                .map(|(w, &(u, v))| w * c.eval(u, v))
                .sum::<f64>()
    }
}

pub fn price_linear_form(contract: &Contract, x: &GompertzMarginal, y: &GompertzMarginal) -> PriceLinearForm {
    let n = contract.term_years(x, y);
    let fb = |k: usize| x.curtate_survival(k);
    let gb = |k: usize| y.curtate_survival(k);
    let d = |k: usize| contract.discounted(k);
    // insurance increments c_{k+1} - c_k
    let step = |k: usize| d(k + 1) - d(k);

    let mut c0 = 0.0;
    let mut terms: Vec<(usize, f64)> = Vec::new();
    match contract.kind {
        ContractKind::JointLifeAnnuity => {
            terms.extend((1..=n).map(|k| (k, d(k))));
        }
        ContractKind::LastSurvivorAnnuity => {
            for k in 1..=n {
                c0 += d(k) * (fb(k) + gb(k));
                terms.push((k, -d(k)));
            }
        }
        ContractKind::JointLifeInsurance => {
            c0 = d(1);
            terms.extend((1..n).map(|k| (k, step(k))));
        }
        ContractKind::LastSurvivorInsurance => {
            c0 = d(1);
            for k in 1..n {
                c0 += step(k) * (fb(k) + gb(k));
                terms.push((k, -step(k)));
            }
        }
        ContractKind::ReversionaryAnnuity => {
            for k in 1..=n {
                c0 += d(k) * (fb(k) + gb(k));
                terms.push((k, -2.0 * d(k)));
            }
        }
        ContractKind::WidowsPension => {
            for k in 1..=n {
                c0 += d(k) * fb(k);
                terms.push((k, -d(k)));
            }
        }
    }
    // C vanishes wherever a coordinate is zero; zero coefficients add nothing
    let (coefficients, points) = terms
        .into_iter()
        .filter(|&(k, w)| w != 0.0 && fb(k) > 0.0 && gb(k) > 0.0)
        .map(|(k, w)| (w, (fb(k), gb(k))))
        .unzip();
    PriceLinearForm {
        c0,
        coefficients,
        points,
    }
}

/// Last-survivor insurance price via `g(K∨) = g(K_X) + g(K_Y) - g(K∧)`, each
/// expectation summed over one-year death probabilities.
pub fn last_survivor_insurance_three_term(
    contract: &Contract,
    x: &GompertzMarginal,
    y: &GompertzMarginal,
    c: &dyn Copula,
) -> Result<f64> {
    if contract.kind != ContractKind::LastSurvivorInsurance {
        return Err(invalid("kind", "three-term decomposition applies to last survivor insurance"));
    }
    let n = contract.term_years(x, y);
    let len = lattice_len(n, x, y);
    let g = contract.insurance_values(n, len);
    let joint = |k: usize| c.eval(x.curtate_survival(k), y.curtate_survival(k));
    let mut total = 0.0;
    for k in 0..len {
        let px = x.curtate_survival(k) - x.curtate_survival(k + 1);
        let py = y.curtate_survival(k) - y.curtate_survival(k + 1);
        let pmin = joint(k) - joint(k + 1);
        total += g[k] * (px + py - pmin);
    }
    Ok(total)
}

/// Amount multiplier that makes `template` cost `target` under `c`.
pub fn calibrate_level(
    template: &Contract,
    x: &GompertzMarginal,
    y: &GompertzMarginal,
    c: &dyn Copula,
    target: f64,
) -> Result<f64> {
    let unit = price_linear_form(template, x, y).evaluate(c);
    if unit.abs() <= f64::MIN_POSITIVE || !unit.is_finite() {
        return Err(Error::ZeroPriceCalibration(template.kind.name().to_string()));
    }
    Ok(target / unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::{Comonotone, Countermonotone, Independence};

    fn lives() -> (GompertzMarginal, GompertzMarginal) {
        (
            GompertzMarginal::with_max_age(65.0, 85.47, 10.45, 115.0).unwrap(),
            GompertzMarginal::with_max_age(62.0, 91.57, 8.13, 115.0).unwrap(),
        )
    }

    const RATE: f64 = 0.05;

    #[test]
    fn whole_life_annuity_levels() {
        let (x, y) = lives();
        let c = Contract::level(ContractKind::JointLifeAnnuity, 1.0, RATE, Term::WholeLife).unwrap();
        let spec = payoff_spec(&c, &x, &y).unwrap();
        assert_eq!(spec.statistic, Statistic::FirstDeath);
        assert_eq!(spec.monotonicity, Monotonicity::Increasing);
        let v: f64 = 1.0 / 1.05;
        let mut acc = 0.0;
        for k in 0..20 {
            assert!((spec.level(k) - acc).abs() < 1e-13);
            acc += v.powi(k as i32 + 1);
        }
    }

    #[test]
    fn whole_life_insurance_is_decreasing() {
        let (x, y) = lives();
        let c = Contract::level(ContractKind::JointLifeInsurance, 10.0, RATE, Term::WholeLife).unwrap();
        let spec = payoff_spec(&c, &x, &y).unwrap();
        assert_eq!(spec.monotonicity, Monotonicity::Decreasing);
        let v: f64 = 1.0 / 1.05;
        for k in 0..30 {
            assert!((spec.level(k) - 10.0 * v.powi(k as i32 + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn growing_benefit_insurance_is_increasing() {
        let (x, y) = lives();
        // b_k v^k = 1.1^k / 1.05^k strictly increasing
        let amounts: Vec<f64> = (1..=10).map(|k| 1.1f64.powi(k)).collect();
        let c = Contract::new(ContractKind::JointLifeInsurance, Term::Years(10), amounts, vec![RATE]).unwrap();
        assert_eq!(payoff_spec(&c, &x, &y).unwrap().monotonicity, Monotonicity::Increasing);
    }

    #[test]
    fn no_single_statistic_for_mixed_contracts() {
        let (x, y) = lives();
        for kind in [ContractKind::ReversionaryAnnuity, ContractKind::WidowsPension] {
            let c = Contract::level(kind, 1.0, RATE, Term::WholeLife).unwrap();
            assert!(matches!(payoff_spec(&c, &x, &y), Err(Error::NoSingleStatisticPayoff(_))));
        }
    }

    #[test]
    fn linear_form_coefficients() {
        let (x, y) = lives();
        let v: f64 = 1.0 / 1.05;
        let jla = price_linear_form(
            &Contract::level(ContractKind::JointLifeAnnuity, 2.0, RATE, Term::Years(5)).unwrap(),
            &x,
            &y,
        );
        assert_eq!(jla.c0, 0.0);
        for (k, w) in jla.coefficients.iter().enumerate() {
            assert!((w - 2.0 * v.powi(k as i32 + 1)).abs() < 1e-14);
        }
        let rev = price_linear_form(
            &Contract::level(ContractKind::ReversionaryAnnuity, 1.0, RATE, Term::Years(5)).unwrap(),
            &x,
            &y,
        );
        let c0: f64 = (1..=5)
            .map(|k| v.powi(k) * (x.curtate_survival(k as usize) + y.curtate_survival(k as usize)))
            .sum();
        assert!((rev.c0 - c0).abs() < 1e-13);
        for (k, w) in rev.coefficients.iter().enumerate() {
            assert!((w + 2.0 * v.powi(k as i32 + 1)).abs() < 1e-14);
        }
    }

    #[test]
    fn three_term_matches_linear_form() {
        let (x, y) = lives();
        let c = Contract::level(ContractKind::LastSurvivorInsurance, 1.0, RATE, Term::WholeLife).unwrap();
        let plf = price_linear_form(&c, &x, &y);
        for cop in [&Independence as &dyn Copula, &Comonotone, &Countermonotone] {
            let a = last_survivor_insurance_three_term(&c, &x, &y, cop).unwrap();
            assert!((a - plf.evaluate(cop)).abs() < 1e-12);
        }
    }

    #[test]
    fn price_monotone_in_concordance() {
        let (x, y) = lives();
        let order = |kind| {
            let plf = price_linear_form(&Contract::level(kind, 1.0, RATE, Term::WholeLife).unwrap(), &x, &y);
            (plf.evaluate(&Countermonotone), plf.evaluate(&Independence), plf.evaluate(&Comonotone))
        };
        let (w, p, m) = order(ContractKind::JointLifeAnnuity);
        assert!(w < p && p < m);
        for kind in [
            ContractKind::LastSurvivorAnnuity,
            ContractKind::JointLifeInsurance,
            ContractKind::ReversionaryAnnuity,
            ContractKind::WidowsPension,
        ] {
            let (w, p, m) = order(kind);
            assert!(w > p && p > m, "{kind:?}: {w} {p} {m}");
        }
        // decreasing in K∨ means increasing in concordance
        let (w, p, m) = order(ContractKind::LastSurvivorInsurance);
        assert!(w < p && p < m);
    }

    #[test]
    fn calibration_of_the_anchor_is_one() {
        let (x, y) = lives();
        let anchor = Contract::level(ContractKind::JointLifeAnnuity, 1.0, RATE, Term::WholeLife).unwrap();
        let target = price_linear_form(&anchor, &x, &y).evaluate(&Independence);
        assert_eq!(calibrate_level(&anchor, &x, &y, &Independence, target).unwrap(), 1.0);
        let zero = Contract::level(ContractKind::JointLifeAnnuity, 0.0, RATE, Term::WholeLife).unwrap();
        assert!(matches!(
            calibrate_level(&zero, &x, &y, &Independence, target),
            Err(Error::ZeroPriceCalibration(_))
        ));
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(Contract::level(ContractKind::JointLifeAnnuity, -1.0, RATE, Term::WholeLife).is_err());
        assert!(Contract::level(ContractKind::JointLifeAnnuity, 1.0, 0.0, Term::WholeLife).is_err());
        assert!(Contract::level(ContractKind::JointLifeAnnuity, 1.0, RATE, Term::Years(0)).is_err());
        assert!(Contract::new(ContractKind::WidowsPension, Term::WholeLife, vec![], vec![RATE]).is_err());
    }

    #[test]
    fn payoff_fn_on_the_lattice() {
        let (x, y) = lives();
        let v: f64 = 1.0 / 1.05;
        let rev = Contract::level(ContractKind::ReversionaryAnnuity, 1.0, RATE, Term::WholeLife).unwrap();
        let f = rev.payoff_fn(&x, &y);
        assert_eq!(f(3, 3), 0.0);
        assert!((f(1, 3) - (v * v + v * v * v)).abs() < 1e-15);
        let wp = Contract::level(ContractKind::WidowsPension, 1.0, RATE, Term::WholeLife).unwrap();
        let f = wp.payoff_fn(&x, &y);
        assert_eq!(f(1, 3), 0.0);
        assert!((f(3, 1) - (v * v + v * v * v)).abs() < 1e-15);
    }
}
