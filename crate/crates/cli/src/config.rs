//! Experiment configuration: one JSON object, ages and rates in explicit units.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use jointlife::bounds::Norm;
use jointlife::contracts::{Contract, ContractKind, Term};
use jointlife::copulas::CopulaSpec;
use jointlife::marginals::GompertzMarginal;
use jointlife::riskmeasures::Distortion;
use serde::{Deserialize, Serialize};

pub const PAPER_CONFIG: &str = include_str!("../configs/paper.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lives: Lives,
    pub contracts: Vec<ContractConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
    pub reference: CopulaSpec,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
    #[serde(default = "default_measures")]
    pub measures: Vec<Distortion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub comparison: ComparisonConfig,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub seed: u64,
}

/// Gompertz law for one of the two lives; the entry age comes from each contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifeLaw {
    pub mode_years: f64,
    pub dispersion_years: f64,
    pub max_age_years: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lives {
    pub x: LifeLaw,
    pub y: LifeLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    pub name: String,
    pub kind: ContractKind,
    #[serde(default = "whole_life")]
    pub term: Term,
    #[serde(default = "unit")]
    pub amounts: Vec<f64>,
    #[serde(default = "five_percent")]
    pub rates: Vec<f64>,
    pub ages_years: [f64; 2],
    /// Rescale amounts so the price under the calibration copula equals the anchor's.
    #[serde(default)]
    pub calibrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub anchor: String,
    #[serde(default = "independence")]
    pub copula: CopulaSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyConfig {
    #[serde(default = "both_norms")]
    pub norms: Vec<Norm>,
    /// Explicit radii; otherwise `gamma`, otherwise the default grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Single radius `gamma · ε_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "sixty")]
    pub grid_points: usize,
    #[serde(default = "one")]
    pub parallel: usize,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            norms: both_norms(),
            epsilons: None,
            gamma: None,
            grid_points: sixty(),
            parallel: 1,
        }
    }
}

/// Parametric family around the reference, used for its radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    #[serde(default)]
    pub survival: bool,
    pub delta_from: f64,
    pub delta_to: f64,
    pub delta_step: f64,
}

impl FamilyConfig {
    pub fn specs(&self) -> Vec<CopulaSpec> {
        let count = ((self.delta_to - self.delta_from) / self.delta_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| CopulaSpec {
                kind: self.kind.clone(),
                delta: Some(self.delta_from + i as f64 * self.delta_step),
                tau: None,
                survival: self.survival,
            })
            .collect()
    }
}

/// Comparison bounds drawn as reference lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    /// Kendall's tau for the tau band; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Grid points with both coordinates in this window pin the copula to the reference.
    #[serde(default = "window")]
    pub window: [f64; 2],
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            tau: None,
            window: window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    #[serde(default = "hundred_thousand")]
    pub n: usize,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self { n: hundred_thousand() }
    }
}

fn default_measures() -> Vec<Distortion> {
    vec![
        Distortion::Mean,
        Distortion::Var { alpha: 0.99 },
        Distortion::Es { alpha: 0.975 },
    ]
}
fn whole_life() -> Term {
    Term::WholeLife
}
fn unit() -> Vec<f64> {
    vec![1.0]
}
fn five_percent() -> Vec<f64> {
    vec![0.05]
}
fn independence() -> CopulaSpec {
    CopulaSpec::named("independence")
}
fn both_norms() -> Vec<Norm> {
    vec![Norm::L1, Norm::Linf]
}
fn sixty() -> usize {
    60
}
fn one() -> usize {
    1
}
fn window() -> [f64; 2] {
    [0.2, 0.8]
}
fn hundred_thousand() -> usize {
    100_000
}

impl ExperimentConfig {
    pub fn paper() -> Self {
        serde_json::from_str(PAPER_CONFIG).expect("bundled config parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Every field checked; errors name the offending path.
    pub fn validate(&self) -> Result<()> {
        for (name, law) in [("lives.x", &self.lives.x), ("lives.y", &self.lives.y)] {
            GompertzMarginal::with_max_age(0.0, law.mode_years, law.dispersion_years, law.max_age_years)
                .with_context(|| format!("{name}"))?;
        }
        ensure!(!self.contracts.is_empty(), "contracts: at least one contract is required");
        let mut names = BTreeSet::new();
        for (i, c) in self.contracts.iter().enumerate() {
            let at = format!("contracts[{i}] ({})", c.name);
            ensure!(!c.name.is_empty(), "contracts[{i}].name: must not be empty");
            ensure!(
                c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-'),
                "contracts[{i}].name: only ASCII letters, digits, '_' and '-' are allowed"
            );
            ensure!(names.insert(c.name.as_str()), "contracts[{i}].name: duplicate name `{}`", c.name);
            self.lives_for(c).with_context(|| format!("{at}.ages_years"))?;
            self.base_contract(c).with_context(|| format!("{at}"))?;
        }
        if let Some(cal) = &self.calibration {
            ensure!(
                self.contracts.iter().any(|c| c.name == cal.anchor),
                "calibration.anchor: no contract named `{}`",
                cal.anchor
            );
        } else if self.contracts.iter().any(|c| c.calibrate) {
            bail!("calibration: required when a contract sets `calibrate`");
        }
        let u = &self.uncertainty;
        ensure!(!u.norms.is_empty(), "uncertainty.norms: at least one norm is required");
        if let Some(eps) = &u.epsilons {
            ensure!(!eps.is_empty(), "uncertainty.epsilons: must not be empty");
            ensure!(eps.iter().all(|e| e.is_finite() && *e >= 0.0), "uncertainty.epsilons: radii must be finite and >= 0");
            ensure!(eps.windows(2).all(|w| w[0] <= w[1]), "uncertainty.epsilons: radii must be sorted ascending");
        }
        if let Some(g) = u.gamma {
            ensure!(g.is_finite() && g >= 0.0, "uncertainty.gamma: must be finite and >= 0");
        }
        ensure!(u.grid_points >= 1, "uncertainty.grid_points: must be >= 1");
        ensure!(u.parallel >= 1, "uncertainty.parallel: must be >= 1");
        ensure!(!self.measures.is_empty(), "measures: at least one measure is required");
        for (i, h) in self.measures.iter().enumerate() {
            h.validate().with_context(|| format!("measures[{i}]"))?;
        }
        if let Some(f) = &self.family {
            ensure!(f.delta_step > 0.0 && f.delta_to >= f.delta_from, "family: need delta_step > 0 and delta_to >= delta_from");
        }
        if let Some(t) = self.comparison.tau {
            ensure!((-1.0..=1.0).contains(&t), "comparison.tau: must lie in [-1, 1]");
        }
        let [a, b] = self.comparison.window;
        ensure!(0.0 <= a && a <= b && b <= 1.0, "comparison.window: need 0 <= lo <= hi <= 1");
        ensure!(self.simulation.n >= 1, "simulation.n: must be >= 1");
        Ok(())
    }

    pub fn lives_for(&self, c: &ContractConfig) -> Result<(GompertzMarginal, GompertzMarginal)> {
        let make = |law: &LifeLaw, age: f64| {
            GompertzMarginal::with_max_age(age, law.mode_years, law.dispersion_years, law.max_age_years)
        };
        Ok((make(&self.lives.x, c.ages_years[0])?, make(&self.lives.y, c.ages_years[1])?))
    }

    /// Contract with the configured amounts, before calibration.
    pub fn base_contract(&self, c: &ContractConfig) -> Result<Contract> {
        Ok(Contract::new(c.kind, c.term, c.amounts.clone(), c.rates.clone())?)
    }

    pub fn contract_named(&self, name: &str) -> Option<&ContractConfig> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_valid() {
        let cfg = ExperimentConfig::paper();
        cfg.validate().unwrap();
        assert_eq!(cfg.contracts.len(), 4);
        assert_eq!(cfg.family.as_ref().unwrap().specs().len(), 13);
    }

    #[test]
    fn round_trip_keeps_everything() {
        let cfg = ExperimentConfig::paper();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = ExperimentConfig::paper();
        cfg.contracts[2].rates = vec![-1.5];
        let msg = format!("{:#}", cfg.validate().unwrap_err());
        assert!(msg.contains("contracts[2]") && msg.contains("F2DI"), "{msg}");

        let mut cfg = ExperimentConfig::paper();
        cfg.uncertainty.epsilons = Some(vec![0.2, 0.1]);
        assert!(format!("{:#}", cfg.validate().unwrap_err()).contains("uncertainty.epsilons"));

        let mut cfg = ExperimentConfig::paper();
        cfg.calibration.as_mut().unwrap().anchor = "nope".into();
        assert!(format!("{:#}", cfg.validate().unwrap_err()).contains("calibration.anchor"));

        let text = PAPER_CONFIG.replace("\"seed\"", "\"sede\"");
        assert!(format!("{:#}", ExperimentConfig::from_json(&text).unwrap_err()).contains("sede"));
    }
}
