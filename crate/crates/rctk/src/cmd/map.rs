use rctk_core::catalog::verify_against_numeric;
use rctk_core::rcmap::map_with;
use rctk_core::specdens::{MappingKind, DEFAULT_TOL};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{kind_name, resolve, say, table_points, RunRecord, DENSITY_UNITS};
use crate::cli::{DensitySource, Globals, MapArgs};
use crate::error::{CliError, Result};
use crate::io::{write_density, write_json};

/// Largest relative deviation `--verify` accepts.
pub const VERIFY_BOUND: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub source: DensitySource,
    pub verify: bool,
    pub points: usize,
    pub tol: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { source: DensitySource::default(), verify: false, points: 400, tol: DEFAULT_TOL }
    }
}

pub fn run(a: &MapArgs, g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    let mut cfg: MapConfig = g.load()?;
    cfg.source.apply(&a.source);
    cfg.verify |= a.verify;
    cfg.points = a.points.unwrap_or(cfg.points);
    cfg.tol = g.tol_or(cfg.tol)?;
    if cfg.points < 2 {
        return Err(CliError::invalid("--points must be at least 2"));
    }
    let src = resolve(&cfg.source)?;
    if cfg.verify && src.entry.is_none() {
        return Err(CliError::invalid("--verify needs a catalog family"));
    }
    let meta = RunRecord { command: "map", config: &cfg, input_sha256: src.input_sha256.clone() }.meta(DENSITY_UNITS);

    let r = map_with(&src.density, src.kind, cfg.tol)?;
    let pts = table_points(&r.residual, cfg.points);
    write_density(&g.path("residual.csv"), &meta, &r.residual, &pts)?;

    let rc_name = match src.kind {
        MappingKind::Fermionic => "eps_rc",
        _ => "omega",
    };
    let mut body = json!({
        "config": cfg,
        "mapping": kind_name(src.kind),
        "lambda": r.lambda,
        "lambda_sq": r.lambda * r.lambda,
        "rc_energy": r.rc_energy,
        "rc_energy_kind": rc_name,
        "principal_value_used": r.principal_value_used,
        "residual": "residual.csv",
    });
    let mut failed = None;
    if let Some((entry, p)) = &src.entry {
        body["closed_form"] = json!({
            "lambda_sq": entry.lambda_sq(p)?,
            "rc_energy": entry.rc_energy(p)?,
            "formula": entry.formula,
        });
        if cfg.verify {
            let v = verify_against_numeric(entry, p, cfg.tol)?;
            let ok = v.worst() <= VERIFY_BOUND;
            body["verify"] = json!({
                "lambda_sq_rel": v.lambda_sq_rel,
                "rc_energy_rel": v.rc_energy_rel,
                "residual_rel": v.residual_rel,
                "points": v.points,
                "bound": VERIFY_BOUND,
                "passed": ok,
            });
            if !ok {
                failed = Some(v.worst());
            }
        }
    }
    write_json(&g.path("map_result.json"), &meta, body)?;
    say(log, format!("lambda^2 = {:.10e}  {rc_name} = {:.10e}", r.lambda * r.lambda, r.rc_energy));
    say(log, format!("wrote {} and {}", g.path("map_result.json").display(), g.path("residual.csv").display()));
    match failed {
        Some(w) => Err(CliError::CheckFailed(format!("closed-form deviation {w:e} exceeds {VERIFY_BOUND:e}"))),
        None => Ok(()),
    }
}
