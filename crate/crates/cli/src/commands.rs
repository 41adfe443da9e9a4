//! Subcommand bodies: each turns a prepared experiment into tables.

use std::sync::Arc;

use anyhow::{Context, Result};
use jointlife::bounds::{
    build_region, default_epsilon_grid, epsilon_for_family, epsilon_max, mean_bounds_linear, sweep, BoundResult, Norm,
    StrategyRegistry,
};
use jointlife::canonical::{build_canonical, CanonicalForm};
use jointlife::contracts::{calibrate_level, payoff_spec, price_linear_form, Contract, Monotonicity, PriceLinearForm};
use jointlife::copulas::{
    tankov_bounds, tau_band_bounds, Comonotone, Copula, CopulaRegistry, Countermonotone, Independence, SharedCopula,
};
use jointlife::marginals::GompertzMarginal;
use jointlife::montecarlo::{empirical_measures, sample_copula, simulate_payoffs};
use jointlife::riskmeasures::Distortion;

use crate::config::ExperimentConfig;
use crate::output::{Cell, Table};

/// One configured contract after calibration.
pub struct Item {
    pub name: String,
    pub contract: Contract,
    pub x: GompertzMarginal,
    pub y: GompertzMarginal,
    /// Multiplier applied to the configured amounts.
    pub level: f64,
    pub linear: PriceLinearForm,
    /// `None` for payoffs that are not monotone in one statistic.
    pub form: Option<CanonicalForm>,
}

impl Item {
    /// Grid points the bounds are taken over.
    pub fn points(&self) -> &[(f64, f64)] {
        match &self.form {
            Some(f) => &f.points,
            None => &self.linear.points,
        }
    }

    fn value(&self, h: &Distortion, c: &dyn Copula) -> Option<f64> {
        match (&self.form, h) {
            (Some(f), _) => Some(f.evaluate(h, c)),
            (None, Distortion::Mean) => Some(self.linear.evaluate(c)),
            (None, _) => None,
        }
    }
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub reference: SharedCopula,
    pub items: Vec<Item>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let registry = CopulaRegistry::with_builtins();
        let reference = registry.build(&config.reference).context("reference")?;
        let anchor = match &config.calibration {
            Some(cal) => {
                let c = config.contract_named(&cal.anchor).expect("validated anchor");
                let (x, y) = config.lives_for(c)?;
                let copula = registry.build(&cal.copula).context("calibration.copula")?;
                let price = price_linear_form(&config.base_contract(c)?, &x, &y).evaluate(copula.as_ref());
                Some((price, copula))
            }
            None => None,
        };
        let mut items = Vec::with_capacity(config.contracts.len());
        for c in &config.contracts {
            let (x, y) = config.lives_for(c)?;
            let base = config.base_contract(c)?;
            let level = match (&anchor, c.calibrate) {
                (Some((price, copula)), true) => calibrate_level(&base, &x, &y, copula.as_ref(), *price)
                    .with_context(|| format!("calibrating {}", c.name))?,
                _ => 1.0,
            };
            let contract = base.scaled(level);
            let linear = price_linear_form(&contract, &x, &y);
            let form = match payoff_spec(&contract, &x, &y) {
                Ok(spec) if spec.monotonicity != Monotonicity::NonMonotone => {
                    Some(build_canonical(&spec, &x, &y).with_context(|| format!("canonical form of {}", c.name))?)
                }
                _ => None,
            };
            items.push(Item {
                name: c.name.clone(),
                contract,
                x,
                y,
                level,
                linear,
                form,
            });
        }
        Ok(Self {
            config,
            reference,
            items,
        })
    }

    /// Labelled copulas and quasi-copulas whose values become reference lines.
    pub fn comparison(&self, item: &Item) -> Result<Vec<(&'static str, SharedCopula)>> {
        let mut out: Vec<(&'static str, SharedCopula)> = vec![
            ("reference", self.reference.clone()),
            ("independence", Arc::new(Independence)),
        ];
        if let Some(tau) = self.config.comparison.tau {
            let (lo, hi) = tau_band_bounds(tau)?;
            out.push(("tau-lower", Arc::new(lo)));
            out.push(("tau-upper", Arc::new(hi)));
        }
        let [a, b] = self.config.comparison.window;
        let pinned: Vec<(f64, f64)> = item
            .points()
            .iter()
            .copied()
            .filter(|&(u, v)| (a..=b).contains(&u) && (a..=b).contains(&v))
            .collect();
        let (lo, hi) = tankov_bounds(&pinned, self.reference.as_ref());
        out.push(("tankov-lower", lo));
        out.push(("tankov-upper", hi));
        out.push(("countermonotone", Arc::new(Countermonotone)));
        out.push(("comonotone", Arc::new(Comonotone)));
        Ok(out)
    }

    pub fn epsilon_top(&self, item: &Item, norm: Norm) -> Result<f64> {
        Ok(epsilon_max(item.points(), self.reference.as_ref(), norm)?.value)
    }

    pub fn grid(&self, item: &Item, norm: Norm) -> Result<Vec<f64>> {
        let u = &self.config.uncertainty;
        if let Some(eps) = &u.epsilons {
            return Ok(eps.clone());
        }
        let top = self.epsilon_top(item, norm)?;
        Ok(match u.gamma {
            Some(g) => vec![g * top],
            None => default_epsilon_grid(top, u.grid_points),
        })
    }
}

pub fn calibration_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("calibration", &["contract", "level", "price_at_pi"]);
    let registry = CopulaRegistry::with_builtins();
    let copula = match &exp.config.calibration {
        Some(cal) => registry.build(&cal.copula)?,
        None => Arc::new(Independence),
    };
    for item in &exp.items {
        t.push(vec![item.name.as_str().into(), item.level.into(), item.linear.evaluate(copula.as_ref()).into()]);
    }
    Ok(t)
}

pub fn price_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("prices", &["contract", "copula", "measure", "value"]);
    for item in &exp.items {
        let copulas: Vec<(&str, SharedCopula)> = vec![
            ("reference", exp.reference.clone()),
            ("independence", Arc::new(Independence)),
            ("countermonotone", Arc::new(Countermonotone)),
            ("comonotone", Arc::new(Comonotone)),
        ];
        for (label, c) in copulas {
            for h in &exp.config.measures {
                if let Some(v) = item.value(h, c.as_ref()) {
                    t.push(vec![item.name.as_str().into(), label.into(), h.label().into(), v.into()]);
                }
            }
        }
    }
    Ok(t)
}

pub fn epsmax_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("epsmax", &["contract", "norm", "epsilon_max", "exact", "family_radius"]);
    let registry = CopulaRegistry::with_builtins();
    let family: Vec<SharedCopula> = match &exp.config.family {
        Some(f) => f.specs().iter().map(|s| registry.build(s)).collect::<jointlife::Result<_>>()?,
        None => Vec::new(),
    };
    let members: Vec<&dyn Copula> = family.iter().map(|c| c.as_ref()).collect();
    for item in &exp.items {
        for &norm in &exp.config.uncertainty.norms {
            let top = epsilon_max(item.points(), exp.reference.as_ref(), norm)?;
            let radius = if members.is_empty() {
                None
            } else {
                Some(epsilon_for_family(&members, exp.reference.as_ref(), item.points(), norm)?)
            };
            t.push(vec![
                item.name.as_str().into(),
                norm.name().into(),
                top.value.into(),
                top.is_exact.into(),
                radius.into(),
            ]);
        }
    }
    Ok(t)
}

fn bound_row(item: &Item, norm: Norm, b: &BoundResult) -> Vec<Cell> {
    vec![
        item.name.as_str().into(),
        b.measure.label().into(),
        norm.name().into(),
        b.epsilon.into(),
        b.lower.into(),
        b.upper.into(),
    ]
}

/// Bounds for every contract, norm and radius of the resolved grid.
pub fn bounds_table(exp: &Experiment, name: &str) -> Result<Table> {
    let mut t = Table::new(name, &["contract", "measure", "norm", "epsilon", "lower", "upper"]);
    let parallel = exp.config.uncertainty.parallel;
    for item in &exp.items {
        for &norm in &exp.config.uncertainty.norms {
            let grid = exp.grid(item, norm)?;
            let rows = match &item.form {
                Some(form) => sweep(form, exp.reference.as_ref(), norm, &grid, &exp.config.measures, parallel)
                    .with_context(|| format!("bounds for {} ({})", item.name, norm.name()))?,
                None => grid
                    .iter()
                    .map(|&eps| mean_bounds_linear(&item.linear, exp.reference.as_ref(), norm, eps))
                    .collect::<jointlife::Result<Vec<_>>>()?,
            };
            for b in &rows {
                t.push(bound_row(item, norm, b));
            }
        }
    }
    Ok(t)
}

/// Attaining value vectors for each bound, for the JSON view of `bounds`.
pub fn attaining_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("attaining", &["contract", "measure", "norm", "epsilon", "side", "m", "r_m"]);
    let registry = StrategyRegistry::with_builtins();
    for item in &exp.items {
        let Some(form) = &item.form else { continue };
        for &norm in &exp.config.uncertainty.norms {
            for eps in exp.grid(item, norm)? {
                let region = build_region(form, exp.reference.as_ref(), norm, eps)?;
                for h in &exp.config.measures {
                    let b = registry.strategy(h)?.bounds(&region, form)?;
                    for (side, r) in [("lower", &b.lower_r), ("upper", &b.upper_r)] {
                        for (m, v) in r.iter().flatten().enumerate() {
                            t.push(vec![
                                item.name.as_str().into(),
                                h.label().into(),
                                norm.name().into(),
                                eps.into(),
                                side.into(),
                                (m + 1).into(),
                                (*v).into(),
                            ]);
                        }
                    }
                }
            }
        }
    }
    Ok(t)
}

pub fn hlines_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("hlines", &["contract", "measure", "label", "value"]);
    for item in &exp.items {
        let comparison = exp.comparison(item)?;
        for h in &exp.config.measures {
            for (label, c) in &comparison {
                if let Some(v) = item.value(h, c.as_ref()) {
                    t.push(vec![item.name.as_str().into(), h.label().into(), (*label).into(), v.into()]);
                }
            }
        }
    }
    Ok(t)
}

pub fn rcurve_table(exp: &Experiment) -> Result<Table> {
    let mut t = Table::new("rcurve", &["contract", "copula", "m", "r_m"]);
    for item in &exp.items {
        let Some(form) = &item.form else { continue };
        for (label, c) in exp.comparison(item)? {
            for (m, r) in form.r_values(c.as_ref()).into_iter().enumerate() {
                t.push(vec![item.name.as_str().into(), label.into(), (m + 1).into(), r.into()]);
            }
        }
    }
    Ok(t)
}

pub struct Simulation {
    pub samples: Vec<Table>,
    pub summary: Table,
}

/// Contract `i` samples with seed `seed + i`.
pub fn simulate(exp: &Experiment) -> Result<Simulation> {
    let n = exp.config.simulation.n;
    let mut samples = Vec::new();
    let mut summary = Table::new("simulation", &["contract", "measure", "estimate", "se", "analytic"]);
    for (i, item) in exp.items.iter().enumerate() {
        let seed = exp.config.seed.wrapping_add(i as u64);
        let uv = sample_copula(exp.reference.as_ref(), n, seed).context("sampling the reference copula")?;
        let payoffs = simulate_payoffs(&item.contract, &item.x, &item.y, &uv)?;
        let (a_var, a_es) = alphas(&exp.config.measures);
        let est = empirical_measures(&payoffs, a_var, a_es, seed)?;
        for h in &exp.config.measures {
            let (e, se) = match h {
                Distortion::Mean => (est.estimate.mean, est.se.mean),
                Distortion::Var { alpha } if *alpha == a_var => (est.estimate.var, est.se.var),
                Distortion::Es { alpha } if *alpha == a_es => (est.estimate.es, est.se.es),
                _ => continue,
            };
            let analytic = item.value(h, exp.reference.as_ref());
            summary.push(vec![item.name.as_str().into(), h.label().into(), e.into(), se.into(), analytic.into()]);
        }
        let mut table = Table::new(format!("samples_{}", item.name), &["payoff"]);
        table.rows = payoffs.into_iter().map(|p| vec![Cell::Num(p)]).collect();
        samples.push(table);
    }
    Ok(Simulation { samples, summary })
}

/// First VaR and ES levels among the measures, with the customary defaults.
fn alphas(measures: &[Distortion]) -> (f64, f64) {
    let var = measures.iter().find_map(|h| match h {
        Distortion::Var { alpha } => Some(*alpha),
        _ => None,
    });
    let es = measures.iter().find_map(|h| match h {
        Distortion::Es { alpha } => Some(*alpha),
        _ => None,
    });
    (var.unwrap_or(0.99), es.unwrap_or(0.975))
}
