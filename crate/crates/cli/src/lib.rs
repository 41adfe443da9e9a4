//! Command-line front-end: reads an experiment config, applies flag overrides and writes
//! CSV/JSON artifacts for pricing, calibration, bound sweeps, r-curves and simulation.

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use jointlife::bounds::Norm;

use commands::Experiment;
use config::ExperimentConfig;
use output::{Format, Table};

#[derive(Debug, Parser)]
#[command(name = "jointlife", version, about = "Robust pricing and risk bounds for joint-life contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mean, VaR and ES of every contract under reference, independence and the Fréchet bounds.
    Price,
    /// Bounds at the configured radii (`--eps`, `epsilons` or `gamma`).
    Bounds,
    /// Bounds over the full radius grid, plus reference lines.
    Sweep,
    /// Calibrated amount multipliers.
    Calibrate,
    /// Monte Carlo payoffs under the reference copula.
    Simulate,
    /// Maximal radius per contract and norm, and the parametric family's radius.
    Epsmax,
    /// `r_m` along the canonical grid for the comparison copulas.
    Rcurve,
    /// calibrate, sweep (both norms), rcurve and simulate in one go.
    ReproducePaper,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Options {
    /// Experiment config (JSON); the bundled experiment config when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Restrict to one norm.
    #[arg(long, global = true, value_parser = parse_norm)]
    pub norm: Option<Norm>,
    /// Comma-separated radii.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse().map_err(|e: jointlife::Error| e.to_string())
}

impl Options {
    pub fn effective_config(&self, command: Command) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::paper(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(norm) = self.norm {
            cfg.uncertainty.norms = vec![norm];
        }
        if let Some(eps) = &self.eps {
            cfg.uncertainty.epsilons = Some(eps.clone());
        }
        if let Some(k) = self.parallel {
            cfg.uncertainty.parallel = k;
        }
        if command == Command::ReproducePaper && self.norm.is_none() {
            cfg.uncertainty.norms = vec![Norm::L1, Norm::Linf];
        }
        cfg.validate().context("after applying command-line overrides")?;
        Ok(cfg)
    }
}

/// What a run produced: written files and text meant for stdout.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub stdout: String,
}

fn emit(report: &mut Report, dir: &Path, table: &Table, format: Format, echo: bool) -> Result<()> {
    report.files.push(table.write(dir, format)?);
    if echo {
        report.stdout.push_str(&table.render(format)?);
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Report> {
    let opts = &cli.opts;
    let cfg = opts.effective_config(cli.command)?;
    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    let effective = opts.out.join("config.effective.json");
    fs::write(&effective, cfg.to_json()).with_context(|| format!("writing {}", effective.display()))?;

    let exp = Experiment::prepare(cfg)?;
    let dir = opts.out.as_path();
    let f = opts.format;
    let mut report = Report {
        files: vec![effective],
        stdout: String::new(),
    };
    match cli.command {
        Command::Price => emit(&mut report, dir, &commands::price_table(&exp)?, f, true)?,
        Command::Calibrate => emit(&mut report, dir, &commands::calibration_table(&exp)?, f, true)?,
        Command::Epsmax => emit(&mut report, dir, &commands::epsmax_table(&exp)?, f, true)?,
        Command::Bounds => {
            let u = &exp.config.uncertainty;
            anyhow::ensure!(
                u.epsilons.is_some() || u.gamma.is_some(),
                "uncertainty.epsilons: `bounds` needs radii from --eps, `epsilons` or `gamma`"
            );
            emit(&mut report, dir, &commands::bounds_table(&exp, "bounds")?, f, true)?;
            if f == Format::Json {
                emit(&mut report, dir, &commands::attaining_table(&exp)?, f, false)?;
            }
        }
        Command::Sweep => {
            emit(&mut report, dir, &commands::bounds_table(&exp, "sweep")?, f, false)?;
            emit(&mut report, dir, &commands::hlines_table(&exp)?, f, false)?;
        }
        Command::Rcurve => emit(&mut report, dir, &commands::rcurve_table(&exp)?, f, false)?,
        Command::Simulate => simulate(&mut report, &exp, dir, f)?,
        Command::ReproducePaper => {
            emit(&mut report, dir, &commands::calibration_table(&exp)?, f, true)?;
            emit(&mut report, dir, &commands::epsmax_table(&exp)?, f, false)?;
            emit(&mut report, dir, &commands::bounds_table(&exp, "sweep")?, f, false)?;
            emit(&mut report, dir, &commands::hlines_table(&exp)?, f, false)?;
            emit(&mut report, dir, &commands::rcurve_table(&exp)?, f, false)?;
            simulate(&mut report, &exp, dir, f)?;
        }
    }
    Ok(report)
}

fn simulate(report: &mut Report, exp: &Experiment, dir: &Path, f: Format) -> Result<()> {
    let sim = commands::simulate(exp)?;
    for t in &sim.samples {
        emit(report, dir, t, f, false)?;
    }
    emit(report, dir, &sim.summary, f, true)
}

/// `{"error": ..., "causes": [...]}` for stderr.
pub fn error_json(err: &anyhow::Error) -> String {
    let causes: Vec<String> = err.chain().skip(1).map(|c| c.to_string()).collect();
    serde_json::json!({ "error": err.to_string(), "causes": causes }).to_string()
}
