#![allow(dead_code)]

use std::sync::Arc;

use jointlife::canonical::{build_canonical, CanonicalForm};
use jointlife::contracts::{payoff_spec, Contract, ContractKind, PayoffSpec, Term};
use jointlife::copulas::{survival_transform, Comonotone, Countermonotone, Gumbel, Independence, SharedCopula};
use jointlife::marginals::GompertzMarginal;
use jointlife::riskmeasures::Distortion;

pub const ALPHA_VAR: f64 = 0.99;
pub const ALPHA_ES: f64 = 0.975;

pub fn measures() -> [Distortion; 3] {
    [
        Distortion::Mean,
        Distortion::Var { alpha: ALPHA_VAR },
        Distortion::Es { alpha: ALPHA_ES },
    ]
}

pub fn life(age: f64, male: bool) -> GompertzMarginal {
    if male {
        GompertzMarginal::with_max_age(age, 85.47, 10.45, 115.0).unwrap()
    } else {
        GompertzMarginal::with_max_age(age, 91.57, 8.13, 115.0).unwrap()
    }
}

pub fn couple(kind: ContractKind) -> (GompertzMarginal, GompertzMarginal) {
    match kind {
        ContractKind::JointLifeAnnuity => (life(35.0, true), life(32.0, false)),
        _ => (life(65.0, true), life(62.0, false)),
    }
}

pub fn reference() -> SharedCopula {
    survival_transform(Arc::new(Gumbel::new(1.96).unwrap()))
}

pub fn named_copulas() -> Vec<(&'static str, SharedCopula)> {
    vec![
        ("independence", Arc::new(Independence)),
        ("countermonotone", Arc::new(Countermonotone)),
        ("comonotone", Arc::new(Comonotone)),
        ("reference", reference()),
    ]
}

/// The four monotone contracts, unit amount, 5% flat rate, whole life.
pub fn monotone_contracts() -> Vec<(Contract, GompertzMarginal, GompertzMarginal)> {
    [
        ContractKind::JointLifeAnnuity,
        ContractKind::LastSurvivorAnnuity,
        ContractKind::JointLifeInsurance,
        ContractKind::LastSurvivorInsurance,
    ]
    .into_iter()
    .map(|k| {
        let (x, y) = couple(k);
        (Contract::level(k, 1.0, 0.05, Term::WholeLife).unwrap(), x, y)
    })
    .collect()
}

pub fn form_of(contract: &Contract, x: &GompertzMarginal, y: &GompertzMarginal) -> (PayoffSpec, CanonicalForm) {
    let spec = payoff_spec(contract, x, y).unwrap();
    let form = build_canonical(&spec, x, y).unwrap();
    (spec, form)
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
