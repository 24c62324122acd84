//! Parallel drivers over the sequential core operations. Work items are
//! evaluated on the rayon pool and reassembled by index, so results do not
//! depend on the number of workers.

use rayon::prelude::*;
use rctk_core::engines::{
    check_ratios, evaluate_cell, run_otto, EngineMapGrid, OttoConfig, OttoCurve, SetTemplate, Solver,
};

/// Runs `f` on a pool of `jobs` workers (0 picks the rayon default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn sweep_map(
    tpl: &SetTemplate,
    v_axis: &[f64],
    gamma_axis: &[f64],
    solver: Solver,
) -> rctk_core::Result<EngineMapGrid> {
    tpl.validate()?;
    let pairs: Vec<(f64, f64)> = gamma_axis.iter().flat_map(|&g| v_axis.iter().map(move |&v| (v, g))).collect();
    let cells = pairs.par_iter().map(|&(v, g)| evaluate_cell(tpl, v, g, solver)).collect();
    EngineMapGrid::from_cells(tpl, solver, v_axis.to_vec(), gamma_axis.to_vec(), cells)
}

pub fn otto_sweep(template: &OttoConfig, ratios: &[f64]) -> rctk_core::Result<OttoCurve> {
    check_ratios(ratios)?;
    let reports = ratios
        .par_iter()
        .map(|&r| run_otto(&OttoConfig { mu_cold: r * template.mu_hot, ..*template }))
        .collect::<rctk_core::Result<Vec<_>>>()?;
    Ok(OttoCurve::from_reports(template.variant(), reports))
}
