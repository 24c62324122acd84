//! Thermodynamic bookkeeping: continuous-engine metrics, (V, Γ) sweeps of
//! the single-electron transistor, and the quantum Otto cycle.

mod metrics;
mod otto;
mod sweep;

pub use metrics::{carnot_cop, carnot_efficiency, engine_metrics, EngineMetrics, Mode, DEADBAND};
pub use otto::{
    check_ratios, otto_sweep, run_otto, CycleReport, Decoupling, OttoConfig, OttoCurve, OttoPoint, RcParams, Treatment,
};
pub use sweep::{
    compare_currents, compare_modes, evaluate_cell, mode_boundaries, rc_transport, sweep_map, Boundary, Cell,
    CurrentAgreement, EngineMapGrid, ModeAgreement, SetTemplate, Solver,
};
