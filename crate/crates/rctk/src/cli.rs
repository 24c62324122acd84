//! Command-line surface. Each command reads an optional JSON configuration,
//! applies flag overrides, and hashes the resolved configuration into the
//! metadata header of everything it writes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cmd;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "rctk",
    version,
    about = "Reaction-coordinate mappings, supersystem master equations and thermal machines"
)]
pub struct Cli {
    /// JSON file with the command's parameters; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Sweep workers; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Relative tolerance override for quadratures and mappings.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One reaction-coordinate mapping step.
    Map(MapArgs),
    /// Repeated mapping steps, building a chain.
    Chain(ChainArgs),
    /// Quantum Otto cycles over a range of cold splittings.
    Otto(OttoArgs),
    /// Single-electron transistor sweeps over bias and coupling.
    Set(SetArgs),
    /// Closed-form density library.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Quick end-to-end consistency checks.
    Selftest,
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    /// Print families with their parameter names.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticsArg {
    Bosonic,
    Fermionic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingArg {
    Phonon,
    Particle,
    Fermionic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Exact,
    Rc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreatmentArg {
    Weak,
    Rc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecouplingArg {
    Instantaneous,
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    SigmaX,
    SigmaZ,
    Excited,
}

/// Parses `lo:hi`.
pub fn parse_range(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
    Ok([p(a)?, p(b)?])
}

/// Where the input density comes from.
#[derive(Debug, Clone, Default, Args)]
pub struct DensityArgs {
    /// Catalog family id (see `catalog list`).
    #[arg(long, conflicts_with = "density")]
    pub family: Option<String>,
    /// Density samples, CSV with header `omega,gamma`.
    #[arg(long)]
    pub density: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Rigid cutoff frequency.
    #[arg(long)]
    pub wm: Option<f64>,
    #[arg(long, value_enum)]
    pub statistics: Option<StatisticsArg>,
    /// Mapping kind; defaults to phonon for bosonic and fermionic otherwise.
    #[arg(long, value_enum)]
    pub mapping: Option<MappingArg>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySource {
    pub family: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub density: Option<PathBuf>,
    pub statistics: Option<StatisticsArg>,
    pub mapping: Option<MappingArg>,
}

impl DensitySource {
    pub fn apply(&mut self, a: &DensityArgs) {
        if a.family.is_some() {
            self.family = a.family.clone();
            self.density = None;
        }
        if a.density.is_some() {
            self.density = a.density.clone();
            self.family = None;
        }
        for (k, v) in [("gamma", a.gamma), ("delta", a.delta), ("eps", a.eps), ("wm", a.wm)] {
            if let Some(v) = v {
                self.params.insert(k.into(), v);
            }
        }
        self.statistics = a.statistics.or(self.statistics);
        self.mapping = a.mapping.or(self.mapping);
    }
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub source: DensityArgs,
    /// Cross-check against the closed form of the catalog family.
    #[arg(long)]
    pub verify: bool,
    /// Points of the residual table.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub source: DensityArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Resampling grid of every residual.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OttoArgs {
    #[arg(long, value_enum)]
    pub treatment: Option<TreatmentArg>,
    #[arg(long, value_enum)]
    pub decoupling: Option<DecouplingArg>,
    /// Run weak, sudden and adiabatic variants side by side.
    #[arg(long)]
    pub all_variants: bool,
    #[arg(long)]
    pub mu_hot: Option<f64>,
    /// Cold splittings swept, `lo:hi`, both inside (0, mu_hot).
    #[arg(long, value_parser = parse_range)]
    pub mu_cold_range: Option<[f64; 2]>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub beta_hot: Option<f64>,
    #[arg(long)]
    pub beta_cold: Option<f64>,
    /// Reaction-coordinate coupling, both reservoirs.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Reaction-coordinate frequency, both reservoirs.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum)]
    pub coupling: Option<CouplingArg>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub ramp_steps: Option<usize>,
    /// Also write the hot and cold isochore Gibbs states as matrix files.
    #[arg(long)]
    pub save_states: bool,
}

#[derive(Debug, Args)]
pub struct SetArgs {
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Bias window `lo:hi` in units of the dot level.
    #[arg(long, value_parser = parse_range)]
    pub v_range: Option<[f64; 2]>,
    #[arg(long)]
    pub v_points: Option<usize>,
    #[arg(long, value_parser = parse_range)]
    pub gamma_range: Option<[f64; 2]>,
    #[arg(long)]
    pub gamma_points: Option<usize>,
    /// Space the coupling axis linearly instead of logarithmically.
    #[arg(long)]
    pub linear_gamma: bool,
    /// Drop level shifts from the reaction-coordinate master equation.
    #[arg(long)]
    pub no_lamb_shift: bool,
    /// Evaluate a single device given as JSON instead of sweeping.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

/// Global settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
    pub tol: Option<f64>,
}

impl Globals {
    pub fn load<T: serde::de::DeserializeOwned + Default>(&self) -> Result<T> {
        match &self.config {
            Some(p) => crate::io::read_json(p),
            None => Ok(T::default()),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn tol_or(&self, default: f64) -> Result<f64> {
        match self.tol {
            Some(t) if !(t > 0.0 && t < 1.0) => Err(CliError::invalid("--tol must lie in (0, 1)")),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }
}

/// Runs a parsed command line, writing progress lines to `log`.
pub fn run(cli: Cli, log: &mut dyn std::io::Write) -> Result<()> {
    let g = Globals { config: cli.config, out: cli.out, jobs: cli.jobs, tol: cli.tol };
    ensure_dir(&g.out)?;
    match cli.command {
        Command::Map(a) => cmd::map::run(&a, &g, log),
        Command::Chain(a) => cmd::chain::run(&a, &g, log),
        Command::Otto(a) => cmd::otto::run(&a, &g, log),
        Command::Set(a) => cmd::set::run(&a, &g, log),
        Command::Catalog { action: CatalogAction::List } => cmd::catalog::list(log),
        Command::Selftest => cmd::selftest::run(&g, log),
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(CliError::io(p))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}
