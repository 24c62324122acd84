use rctk_core::rcmap::{normalized_linf, recurse};
use rctk_core::specdens::{Family, GridSpec, SpectralDensity, Statistics, DEFAULT_TOL};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{kind_name, resolve, say, RunRecord, DENSITY_UNITS};
use crate::cli::{ChainArgs, DensitySource, Globals};
use crate::error::{CliError, Result};
use crate::io::{write_density, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub source: DensitySource,
    pub steps: usize,
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { source: DensitySource::default(), steps: 10, grid_points: 4000, tol: DEFAULT_TOL }
    }
}

/// The shape a rigid-cutoff recursion settles into on the given support.
pub fn fixed_point(statistics: Statistics, lo: f64, hi: f64) -> (&'static str, SpectralDensity) {
    match statistics {
        Statistics::BosonicOdd => (
            "rubin",
            SpectralDensity::analytic(Family::Rubin { gamma: hi / 2f64.sqrt(), cutoff: hi }, statistics)
                .expect("positive cutoff"),
        ),
        Statistics::FermionicFullAxis => {
            let half = 0.5 * (hi - lo);
            let fam = Family::Semicircle { gamma: half, delta: half, eps: 0.5 * (hi + lo) };
            ("semicircle", SpectralDensity::analytic(fam, statistics).expect("positive width"))
        }
    }
}

pub fn run(a: &ChainArgs, g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    let mut cfg: ChainConfig = g.load()?;
    cfg.source.apply(&a.source);
    cfg.steps = a.steps.unwrap_or(cfg.steps);
    cfg.grid_points = a.grid_points.unwrap_or(cfg.grid_points);
    cfg.tol = g.tol_or(cfg.tol)?;
    if cfg.steps == 0 || cfg.grid_points < 4 {
        return Err(CliError::invalid("need at least one step and four grid points"));
    }
    let src = resolve(&cfg.source)?;
    let s = src.density.support;
    if !(s.rigid && s.lo.is_finite() && s.hi.is_finite()) {
        return Err(CliError::invalid("recursive mapping needs a density with a rigid cutoff"));
    }
    let meta = RunRecord { command: "chain", config: &cfg, input_sha256: src.input_sha256.clone() }.meta(DENSITY_UNITS);

    let grid = GridSpec::new(s.lo, s.hi, cfg.grid_points);
    let chain = recurse(&src.density, cfg.steps, src.kind, &grid, cfg.tol)?;
    let nodes = grid.nodes();
    let mut files = Vec::with_capacity(cfg.steps);
    for (i, r) in chain.step_residuals.iter().enumerate() {
        let name = format!("residual_step_{}.csv", i + 1);
        write_density(&g.path(&name), &meta, r, &nodes)?;
        files.push(name);
    }
    // the two half-cells next to the rigid edges are left out of the comparison
    let (shape, target) = fixed_point(src.density.statistics, s.lo, s.hi);
    let linf = normalized_linf(&chain.terminal_residual, &target, &nodes[1..nodes.len() - 1]);
    let body = json!({
        "config": cfg,
        "mapping": kind_name(src.kind),
        "sites": chain.site_energies,
        "hops": chain.hop_couplings,
        "residual": files.last(),
        "step_residuals": files,
        "fixed_point": {"shape": shape, "normalized_linf": linf},
    });
    write_json(&g.path("chain.json"), &meta, body)?;
    say(log, format!("{} steps; terminal residual is {linf:.3e} from the {shape} shape (normalized max)", cfg.steps));
    say(log, format!("wrote {} and {} residual tables", g.path("chain.json").display(), files.len()));
    Ok(())
}
