//! A fast smoke run through every layer; the full acceptance suite lives in
//! the test target of this crate.

use num_complex::Complex64;
use rctk_core::catalog::{entries, verify_against_numeric};
use rctk_core::engines::{evaluate_cell, run_otto, OttoConfig, RcParams, SetTemplate, Solver, Treatment};
use rctk_core::quantum::{build_supersystem, eigh, gibbs, CMatrix, SupersystemSpec, TripleDot};

use super::say;
use crate::cli::Globals;
use crate::error::{CliError, Result};
use crate::io::matrix::{read_matrix, write_matrix};

type Check = fn() -> rctk_core::Result<(bool, String)>;

fn catalog() -> rctk_core::Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for e in entries() {
        let p: &[f64] = if e.params.len() == 3 { &[1.0, 0.7, 1.5] } else { &[1.0, 2.0] };
        worst = worst.max(verify_against_numeric(e, p, 1e-7)?.worst());
    }
    Ok((worst < 1e-3, format!("worst closed-form deviation {worst:.2e}")))
}

fn otto() -> rctk_core::Result<(bool, String)> {
    let weak = run_otto(&OttoConfig { mu_cold: 0.7, ..Default::default() })?;
    let eta_err = (weak.efficiency.unwrap_or(f64::NAN) - 0.3).abs();
    let rc = RcParams { lambda: 0.3, omega: 1.0 };
    let strong = run_otto(&OttoConfig {
        mu_cold: 0.7,
        treatment: Treatment::ReactionCoordinate,
        rc_hot: rc,
        rc_cold: rc,
        ..Default::default()
    })?;
    let ledger = strong.ledger_residual();
    Ok((eta_err < 1e-12 && ledger < 1e-8, format!("weak efficiency error {eta_err:.1e}, ledger residual {ledger:.1e}")))
}

fn triple_dot() -> rctk_core::Result<(bool, String)> {
    let (gamma, delta, eps) = (2.0, 0.05, 1.0);
    let l = (gamma * delta / 2.0f64).sqrt();
    let s = build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
        eps,
        lambda_l: l,
        lambda_r: l,
        eps_l: eps,
        eps_r: eps,
    }))?;
    let h = &s.hamiltonian.entries;
    let one: Vec<usize> = (0..8usize).filter(|i| i.count_ones() == 1).collect();
    let block = CMatrix::from_fn(3, 3, |a, b| h[(one[a], one[b])]);
    let vac = h[(0, 0)].re;
    let split = (gamma * delta).sqrt();
    let err = eigh(&block)
        .values
        .iter()
        .zip([eps - split, eps, eps + split])
        .map(|(e, want)| (e - vac - want).abs())
        .fold(0.0, f64::max);
    Ok((err < 1e-10, format!("single-particle level error {err:.1e}")))
}

fn solvers() -> rctk_core::Result<(bool, String)> {
    let tpl = SetTemplate::default();
    let a = evaluate_cell(&tpl, 1.0, 1.0, Solver::Exact);
    let b = evaluate_cell(&tpl, 1.0, 1.0, Solver::Rc);
    let (Some(x), Some(y)) = (a.transport, b.transport) else {
        return Ok((false, format!("cell failed: {:?} {:?}", a.error, b.error)));
    };
    let dev = ((x.matter - y.matter) / x.matter).abs().max(((x.energy - y.energy) / x.energy).abs());
    Ok((dev < 0.03, format!("exact vs reaction-coordinate currents differ by {dev:.2e}")))
}

fn container() -> rctk_core::Result<(bool, String)> {
    let s = build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
        eps: 1.0,
        lambda_l: 0.2,
        lambda_r: 0.1,
        eps_l: 0.9,
        eps_r: 1.1,
    }))?;
    let rho = gibbs(&s.hamiltonian, 1.3)?.density;
    let mut bytes = Vec::new();
    write_matrix(&mut bytes, &rho, serde_json::json!({"beta": 1.3})).expect("writing to memory");
    let same = match read_matrix(bytes.as_slice()) {
        Ok((back, _)) => back.entries == rho.entries && back.entries[(0, 0)] != Complex64::new(0.0, 0.0),
        Err(_) => false,
    };
    Ok((same, format!("{} byte round trip", bytes.len())))
}

pub fn run(_g: &Globals, log: &mut dyn std::io::Write) -> Result<()> {
    let checks: [(&str, Check); 5] = [
        ("catalog", catalog),
        ("otto", otto),
        ("triple_dot", triple_dot),
        ("solvers", solvers),
        ("container", container),
    ];
    let mut failed = Vec::new();
    for (name, f) in checks {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, e.to_string()),
        };
        say(log, format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
        if !ok {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("self test failed: {}", failed.join(", "))))
    }
}
