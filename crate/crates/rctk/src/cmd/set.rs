use rctk_core::engines::{
    compare_currents, compare_modes, engine_metrics, mode_boundaries, Cell, EngineMapGrid, SetTemplate, Solver,
};
use rctk_core::exactset::{SetModel, TransportResult};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{say, RunRecord};
use crate::cli::{linspace, logspace, Globals, SetArgs, SolverArg};
use crate::error::{CliError, Result};
use crate::io::{num, opt_num, read_json, write_csv, write_json, Meta};
use crate::par::{sweep_map, with_jobs};

pub const UNITS: &str =
    "energies in units of the dot level eps; matter current in eps, energy current in eps^2; hbar = k_B = 1";

pub const MAP_HEADER: [&str; 10] = ["V", "Gamma", "IM", "IE", "P", "QL", "QR", "eta", "cop", "mode"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetRun {
    pub device: SetTemplate,
    pub solver: SolverArg,
    pub v_range: [f64; 2],
    pub v_points: usize,
    pub gamma_range: [f64; 2],
    pub gamma_points: usize,
    /// Logarithmic spacing of the coupling axis.
    pub gamma_log: bool,
}

impl Default for SetRun {
    fn default() -> Self {
        Self {
            device: SetTemplate::default(),
            solver: SolverArg::Exact,
            v_range: [0.0, 2.0],
            v_points: 20,
            gamma_range: [0.1, 100.0],
            gamma_points: 20,
            gamma_log: true,
        }
    }
}

impl SetRun {
    pub fn axes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let [v0, v1] = self.v_range;
        let [g0, g1] = self.gamma_range;
        if self.v_points == 0 || self.gamma_points == 0 || !(v1 >= v0) || !(g1 >= g0 && g0 > 0.0) {
            return Err(CliError::invalid("axes need points and ordered ranges with positive couplings"));
        }
        let g = if self.gamma_log { logspace(g0, g1, self.gamma_points) } else { linspace(g0, g1, self.gamma_points) };
        Ok((linspace(v0, v1, self.v_points), g))
    }

    pub fn solvers(&self) -> Vec<Solver> {
        match self.solver {
            SolverArg::Exact => vec![Solver::Exact],
            SolverArg::Rc => vec![Solver::Rc],
            SolverArg::Both => vec![Solver::Exact, Solver::Rc],
        }
    }
}

pub fn transport_row(
    v: f64,
    gamma: f64,
    t: Option<&TransportResult>,
    m: Option<(Option<f64>, Option<f64>, &str)>,
) -> Vec<String> {
    let mut row = vec![num(v), num(gamma)];
    match t {
        Some(t) => row.extend([t.matter, t.energy, t.power, t.heat_left, t.heat_right].map(num)),
        None => row.extend(std::iter::repeat_n(String::new(), 5)),
    }
    match m {
        Some((eta, cop, mode)) => row.extend([opt_num(eta), opt_num(cop), mode.to_string()]),
        None => row.extend(std::iter::repeat_n(String::new(), 3)),
    }
    row
}

fn cell_row(c: &Cell) -> Vec<String> {
    transport_row(c.v, c.gamma, c.transport.as_ref(), c.metrics.map(|m| (m.efficiency, m.cop, m.mode.as_str())))
}

fn grid_summary(grid: &EngineMapGrid) -> Value {
    json!({
        "solver": grid.solver.as_str(),
        "cells": grid.cells.len(),
        "failures": grid.failures().count(),
        "warnings": grid.warnings,
        "boundaries": mode_boundaries(grid),
    })
}

fn run_model(path: &std::path::Path, g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    let model: SetModel = read_json(path)?;
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    let tol = g.tol_or(SetTemplate::default().tol)?;
    let record = json!({"model": model, "tol": tol});
    let meta = Meta::new(&RunRecord { command: "set", config: &record, input_sha256: Some(sha(&bytes)) }, UNITS);
    let t = model.currents(tol)?;
    let m = engine_metrics(&t, 1.0 / model.left.beta, 1.0 / model.right.beta).ok();
    let row = transport_row(
        model.left.mu - model.right.mu,
        model.left.gamma,
        Some(&t),
        m.as_ref().map(|m| (m.efficiency, m.cop, m.mode.as_str())),
    );
    write_csv(&g.path("transport.csv"), &meta, &MAP_HEADER, &[row])?;
    say(log, format!("I_M = {:.10e}  I_E = {:.10e}  P = {:.10e}", t.matter, t.energy, t.power));
    say(log, format!("wrote {}", g.path("transport.csv").display()));
    Ok(())
}

fn sha(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(a: &SetArgs, g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    if let Some(p) = &a.model {
        return run_model(p, g, log);
    }
    let mut run: SetRun = g.load()?;
    run.solver = a.solver.unwrap_or(run.solver);
    run.v_range = a.v_range.unwrap_or(run.v_range);
    run.v_points = a.v_points.unwrap_or(run.v_points);
    run.gamma_range = a.gamma_range.unwrap_or(run.gamma_range);
    run.gamma_points = a.gamma_points.unwrap_or(run.gamma_points);
    run.gamma_log &= !a.linear_gamma;
    run.device.lamb_shift &= !a.no_lamb_shift;
    run.device.tol = g.tol_or(run.device.tol)?;
    run.device.validate()?;
    let (v_axis, g_axis) = run.axes()?;
    let meta = RunRecord { command: "set", config: &run, input_sha256: None }.meta(UNITS);

    let solvers = run.solvers();
    let grids: Vec<EngineMapGrid> = solvers
        .iter()
        .map(|&s| with_jobs(g.jobs, || sweep_map(&run.device, &v_axis, &g_axis, s)))
        .collect::<rctk_core::Result<_>>()?;

    let mut errors = Vec::new();
    let mut body = json!({"config": run, "grids": {}});
    for grid in &grids {
        let name = if grids.len() == 1 {
            "engine_map.csv".to_string()
        } else {
            format!("engine_map_{}.csv", grid.solver.as_str())
        };
        let rows: Vec<Vec<String>> = grid.cells.iter().map(cell_row).collect();
        write_csv(&g.path(&name), &meta, &MAP_HEADER, &rows)?;
        for c in grid.failures() {
            errors.push(vec![num(c.v), num(c.gamma), grid.solver.as_str().into(), c.error.clone().unwrap_or_default()]);
        }
        for w in &grid.warnings {
            say(log, format!("warning ({}): {w}", grid.solver.as_str()));
        }
        body["grids"][grid.solver.as_str()] = grid_summary(grid);
        say(
            log,
            format!(
                "wrote {} ({} cells, {} failed)",
                g.path(&name).display(),
                grid.cells.len(),
                grid.failures().count()
            ),
        );
    }
    write_csv(&g.path("errors.csv"), &meta, &["V", "Gamma", "solver", "error"], &errors)?;

    if let [exact, rc] = grids.as_slice() {
        let modes = compare_modes(exact, rc)?;
        body["agreement"] = json!({ "modes": modes });
        say(
            log,
            format!(
                "modes: {} of {} cells differ, {} beyond one cell",
                modes.mismatched, modes.cells, modes.beyond_one_cell
            ),
        );
        match compare_currents(exact, rc) {
            Ok(c) => {
                body["agreement"]["currents"] = json!(c);
                say(
                    log,
                    format!(
                        "currents: worst row-normalized deviation matter {:.3e}, energy {:.3e}",
                        c.matter, c.energy
                    ),
                );
            }
            Err(e) => say(log, format!("currents not compared: {e}")),
        }
    }
    write_json(&g.path("boundaries.json"), &meta, body)?;
    say(log, format!("wrote {}", g.path("boundaries.json").display()));
    Ok(())
}
