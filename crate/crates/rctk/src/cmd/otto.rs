use std::fs::File;
use std::io::BufWriter;

use nalgebra::DVector;
use num_complex::Complex64;
use rctk_core::engines::{Decoupling, OttoConfig, OttoCurve, RcParams, Treatment};
use rctk_core::quantum::{
    adaptive_n_max, build_supersystem, gibbs, CMatrix, HilbertSpace, OperatorMatrix, SupersystemSpec, SystemOperator,
    TlsRc,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{say, RunRecord};
use crate::cli::{linspace, CouplingArg, DecouplingArg, Globals, OttoArgs, TreatmentArg};
use crate::error::{CliError, Result};
use crate::io::matrix::write_matrix;
use crate::io::{num, opt_num, write_csv, write_json, Meta};
use crate::par::{otto_sweep, with_jobs};

pub const UNITS: &str = "energies in the units of the two-level splittings; hbar = k_B = 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OttoRun {
    pub cycle: OttoConfig,
    /// Weak, sudden and adiabatic variants of `cycle` side by side.
    pub all_variants: bool,
    /// Cold splittings swept; defaults to 5% to 97.5% of the hot one.
    pub mu_cold_range: Option<[f64; 2]>,
    pub points: usize,
    pub save_states: bool,
}

impl Default for OttoRun {
    fn default() -> Self {
        Self { cycle: OttoConfig::default(), all_variants: false, mu_cold_range: None, points: 40, save_states: false }
    }
}

impl OttoRun {
    pub fn ratios(&self) -> Result<Vec<f64>> {
        let mu = self.cycle.mu_hot;
        let [lo, hi] = self.mu_cold_range.unwrap_or([0.05 * mu, 0.975 * mu]);
        if !(lo > 0.0 && hi >= lo && hi < mu) || self.points == 0 {
            return Err(CliError::invalid("cold splittings must satisfy 0 < lo <= hi < mu_hot"));
        }
        Ok(linspace(lo / mu, hi / mu, self.points))
    }

    pub fn variants(&self) -> Vec<OttoConfig> {
        if !self.all_variants {
            return vec![self.cycle];
        }
        let rc = OttoConfig { treatment: Treatment::ReactionCoordinate, ..self.cycle };
        vec![
            OttoConfig { treatment: Treatment::WeakCoupling, ..self.cycle },
            OttoConfig { decoupling: Decoupling::Instantaneous, ..rc },
            OttoConfig { decoupling: Decoupling::Adiabatic, ..rc },
        ]
    }
}

fn apply(run: &mut OttoRun, a: &OttoArgs) {
    let c = &mut run.cycle;
    if let Some(t) = a.treatment {
        c.treatment = match t {
            TreatmentArg::Weak => Treatment::WeakCoupling,
            TreatmentArg::Rc => Treatment::ReactionCoordinate,
        };
    }
    if let Some(d) = a.decoupling {
        c.decoupling = match d {
            DecouplingArg::Instantaneous => Decoupling::Instantaneous,
            DecouplingArg::Adiabatic => Decoupling::Adiabatic,
        };
    }
    if let Some(s) = a.coupling {
        c.coupling = match s {
            CouplingArg::SigmaX => SystemOperator::SigmaX,
            CouplingArg::SigmaZ => SystemOperator::SigmaZ,
            CouplingArg::Excited => SystemOperator::Excited,
        };
    }
    c.mu_hot = a.mu_hot.unwrap_or(c.mu_hot);
    c.beta_hot = a.beta_hot.unwrap_or(c.beta_hot);
    c.beta_cold = a.beta_cold.unwrap_or(c.beta_cold);
    for rc in [&mut c.rc_hot, &mut c.rc_cold] {
        *rc = RcParams { lambda: a.lambda.unwrap_or(rc.lambda), omega: a.omega.unwrap_or(rc.omega) };
    }
    c.n_max = a.n_max.or(c.n_max);
    c.ramp_steps = a.ramp_steps.unwrap_or(c.ramp_steps);
    run.all_variants |= a.all_variants;
    run.mu_cold_range = a.mu_cold_range.or(run.mu_cold_range);
    run.points = a.points.unwrap_or(run.points);
    run.save_states |= a.save_states;
}

/// Gibbs state of one isochore: the supersystem for the reaction-coordinate
/// treatment, the bare two-level system otherwise.
fn save_isochore(g: &Globals, meta: &Meta, cfg: &OttoConfig, hot: bool) -> Result<String> {
    let (mu, beta, rc) =
        if hot { (cfg.mu_hot, cfg.beta_hot, cfg.rc_hot) } else { (cfg.mu_cold, cfg.beta_cold, cfg.rc_cold) };
    let (rho, spec) = match cfg.treatment {
        Treatment::WeakCoupling => {
            let space = HilbertSpace::new(&[("system", 2)])?;
            let h = CMatrix::from_diagonal(&DVector::from_vec(vec![
                Complex64::new(0.5 * mu, 0.0),
                Complex64::new(-0.5 * mu, 0.0),
            ]));
            let rho = gibbs(&OperatorMatrix::hermitian(space, h)?, beta)?.density;
            (rho, json!({"system_only": {"mu": mu}}))
        }
        Treatment::ReactionCoordinate => {
            let n_max =
                cfg.n_max.unwrap_or_else(|| adaptive_n_max(cfg.rc_hot.omega.min(cfg.rc_cold.omega), cfg.beta_hot));
            let spec = SupersystemSpec::TlsRc(TlsRc {
                mu,
                lambda: rc.lambda,
                omega: rc.omega,
                coupling: cfg.coupling,
                n_max,
                renormalize: false,
            });
            let s = build_supersystem(&spec)?;
            (gibbs(&s.hamiltonian, beta)?.density, json!(spec))
        }
    };
    let name = format!("gibbs_{}.rctkmat", if hot { "hot" } else { "cold" });
    let path = g.path(&name);
    let f = File::create(&path).map_err(CliError::io(&path))?;
    let extra = json!({"meta": meta, "beta": beta, "spec": spec});
    write_matrix(BufWriter::new(f), &rho, extra).map_err(CliError::io(&path))?;
    Ok(name)
}

pub fn run(a: &OttoArgs, g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    let mut run: OttoRun = g.load()?;
    apply(&mut run, a);
    run.cycle.validate()?;
    let ratios = run.ratios()?;
    let meta = RunRecord { command: "otto", config: &run, input_sha256: None }.meta(UNITS);

    let curves: Vec<OttoCurve> = run
        .variants()
        .iter()
        .map(|v| with_jobs(g.jobs, || otto_sweep(v, &ratios)))
        .collect::<rctk_core::Result<_>>()?;

    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| c.points.iter())
        .map(|p| vec![num(p.mu_ratio), num(p.w), opt_num(p.eta), p.variant.clone()])
        .collect();
    write_csv(&g.path("parametric.csv"), &meta, &["mu_ratio", "W", "eta", "variant"], &rows)?;

    let mut states = Vec::new();
    if run.save_states {
        let cfg = run.variants().last().copied().expect("at least one variant");
        let cfg = OttoConfig { mu_cold: ratios[0] * cfg.mu_hot, ..cfg };
        states.push(save_isochore(g, &meta, &cfg, true)?);
        states.push(save_isochore(g, &meta, &cfg, false)?);
    }
    let body = json!({
        "config": run,
        "curves": curves.iter().map(|c| json!({
            "variant": c.variant,
            "max_efficiency": c.max_efficiency.map(|i| &c.points[i]),
            "worst_ledger_residual": c.reports.iter().map(|r| r.ledger_residual()).fold(0.0, f64::max),
            "reports": c.reports,
        })).collect::<Vec<_>>(),
        "states": states,
    });
    write_json(&g.path("cycle_report.json"), &meta, body)?;
    for c in &curves {
        match c.max_efficiency {
            Some(i) => {
                let p = &c.points[i];
                say(
                    log,
                    format!(
                        "{}: max efficiency {:.6} at ratio {:.4} (W = {:.6})",
                        c.variant,
                        p.eta.unwrap(),
                        p.mu_ratio,
                        p.w
                    ),
                )
            }
            None => say(log, format!("{}: no work-producing point in range", c.variant)),
        }
    }
    say(log, format!("wrote {} and {}", g.path("parametric.csv").display(), g.path("cycle_report.json").display()));
    Ok(())
}
