//! Simulated payoffs under a copula and empirical risk estimates.
//!
//! Draws are split into fixed-size shards; shard `i` uses ChaCha8 seeded with the run
//! seed on stream `i`, and shards are concatenated in index order. The sample stream
//! therefore depends only on `(seed, n)`, not on how many threads run the shards.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contracts::Contract;
use crate::copulas::{Copula, CopulaRegistry, CopulaSpec};
use crate::error::{invalid, Error, Result};
use crate::marginals::GompertzMarginal;
use crate::riskmeasures::{measures_from_discrete, Atom, DiscreteMeasures};

pub const SHARD_SIZE: usize = 1 << 16;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub seed: u64,
    pub copula: CopulaSpec,
    pub contract: Contract,
    pub x: GompertzMarginal,
    pub y: GompertzMarginal,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "sample count must be >= 1"));
        }
        self.contract.validate()
    }

    pub fn run(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let c = CopulaRegistry::with_builtins().build(&self.copula)?;
        let uv = sample_copula(c.as_ref(), self.n, self.seed)?;
        simulate_payoffs(&self.contract, &self.x, &self.y, &uv)
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

/// `n` i.i.d. pairs from `c`. Quasi-copula bounds have no sampler and are rejected.
pub fn sample_copula(c: &dyn Copula, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(invalid("n", "sample count must be >= 1"));
    }
    let shards = n.div_ceil(SHARD_SIZE);
    let parts: Vec<Option<Vec<(f64, f64)>>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = shard_rng(seed, s);
            let len = SHARD_SIZE.min(n - s * SHARD_SIZE);
            (0..len).map(|_| c.sample_pair(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p.ok_or_else(|| Error::NotSampleable(c.label()))?);
    }
    Ok(out)
}

/// Curtate lifetimes `(⌊X⌋, ⌊Y⌋)` with `X = F̄⁻¹(u)`, `Y = Ḡ⁻¹(v)`.
pub fn curtate_pairs(x: &GompertzMarginal, y: &GompertzMarginal, samples: &[(f64, f64)]) -> Result<Vec<(usize, usize)>> {
    samples
        .iter()
        .map(|&(u, v)| Ok((x.quantile_survival(u)?.floor() as usize, y.quantile_survival(v)?.floor() as usize)))
        .collect()
}

pub fn simulate_payoffs(
    contract: &Contract,
    x: &GompertzMarginal,
    y: &GompertzMarginal,
    samples: &[(f64, f64)],
) -> Result<Vec<f64>> {
    let payoff = contract.payoff_fn(x, y);
    Ok(curtate_pairs(x, y, samples)?
        .into_iter()
        .map(|(kx, ky)| payoff(kx, ky))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalMeasures {
    pub estimate: DiscreteMeasures,
    /// Bootstrap standard errors of mean, VaR and ES.
    pub se: DiscreteMeasures,
}

/// Distinct payoff values with their counts, ascending.
fn tally(payoffs: &[f64]) -> Vec<(f64, u64)> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &p in payoffs {
        // nonnegative floats order like their bit patterns; -0.0 folds into 0.0
        *counts.entry((p + 0.0).to_bits()).or_default() += 1;
    }
    counts.into_iter().map(|(b, c)| (f64::from_bits(b), c)).collect()
}

fn law(values: &[(f64, u64)], counts: impl Iterator<Item = u64>, n: u64) -> Vec<Atom> {
    values
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(&(x, _), c)| (x, c as f64 / n as f64))
        .collect()
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Plug-in mean / VaR / ES with nonparametric bootstrap standard errors. Resamples are
/// multinomial draws over the distinct payoff values, which has the same law as
/// resampling individual payoffs.
pub fn empirical_measures(payoffs: &[f64], alpha_var: f64, alpha_es: f64, seed: u64) -> Result<EmpiricalMeasures> {
    if payoffs.is_empty() {
        return Err(Error::Empty("payoff sample"));
    }
    if let Some(&bad) = payoffs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::Domain {
            value: bad,
            domain: "payoffs finite and >= 0",
        });
    }
    let n = payoffs.len() as u64;
    let values = tally(payoffs);
    let estimate = measures_from_discrete(&law(&values, values.iter().map(|v| v.1), n), alpha_var, alpha_es)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut draws = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        // sequential conditional binomials
        let mut left = n;
        let mut mass_left = n;
        let mut counts = Vec::with_capacity(values.len());
        for &(_, c) in &values {
            let k = if left == 0 || mass_left == 0 {
                0
            } else if c >= mass_left {
                left
            } else {
                let p = c as f64 / mass_left as f64;
                Binomial::new(left, p)
                    .map_err(|e| Error::SolverFailure(format!("bootstrap: {e}")))?
                    .sample(&mut rng)
            };
            counts.push(k);
            left -= k;
            mass_left -= c;
        }
        draws.push(measures_from_discrete(&law(&values, counts.into_iter(), n), alpha_var, alpha_es)?);
    }
    let pick = |f: fn(&DiscreteMeasures) -> f64| std_dev(&draws.iter().map(f).collect::<Vec<_>>());
    Ok(EmpiricalMeasures {
        estimate,
        se: DiscreteMeasures {
            mean: pick(|d| d.mean),
            var: pick(|d| d.var),
            es: pick(|d| d.es),
        },
    })
}

/// One payoff per line under a `payoff` header, 12 significant digits.
pub fn write_payoffs_csv(mut w: impl Write, payoffs: &[f64]) -> std::io::Result<()> {
    writeln!(w, "payoff")?;
    for &p in payoffs {
        writeln!(w, "{}", format_g12(p))?;
    }
    Ok(())
}

/// `%.12g`.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..12).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
