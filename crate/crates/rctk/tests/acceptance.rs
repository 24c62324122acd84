//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! and the target exits non-zero if any of them fails. It runs without the
//! libtest harness so the lines are always shown:
//!
//! `cargo test --release -p rctk --test acceptance`

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rctk::par;
use rctk_core::catalog::{self, verify_against_numeric};
use rctk_core::dynamics::{build_redfield, steady_state, RedfieldOptions, ReservoirSpec};
use rctk_core::engines::{
    carnot_cop, carnot_efficiency, compare_currents, compare_modes, CurrentAgreement, Decoupling, EngineMapGrid, Mode,
    ModeAgreement, OttoConfig, OttoCurve, SetTemplate, Solver, Treatment,
};
use rctk_core::quantum::{
    build_supersystem, eigh, gibbs, mean_force_state, trace_distance, CMatrix, SupersystemSpec, SystemOperator, TlsRc,
    TripleDot,
};
use rctk_core::rcmap::{
    bogoliubov, lanczos_chain, map_fermionic, map_phonon, map_with, normalized_linf, recurse, ChainKind, DiscreteStar,
};
use rctk_core::specdens::{Family, GridSpec, MappingKind, SpectralDensity, Statistics};

const CATALOG_TOL: f64 = 1e-3;
const CATALOG_BUDGET: Duration = Duration::from_secs(60);
const FIXED_POINT_TOL: f64 = 1e-3;
const RECURSION_TOL: f64 = 0.02;
const SPECTRUM_TOL: f64 = 1e-10;
const GIBBS_TOL: f64 = 1e-6;
const MEAN_FORCE_TOL: f64 = 5e-3;
const CURRENT_TOL: f64 = 0.03;
const SET_BUDGET: Duration = Duration::from_secs(600);
const STALL_GAP_TOL: f64 = 0.01;
const CARNOT_SLACK: f64 = 1e-8;
const ENTROPY_FLOOR: f64 = -1e-10;
const LEDGER_TOL: f64 = 1e-8;
const CANONICAL_TOL: f64 = 1e-10;
const CHAIN_TOL: f64 = 1e-3;
const JOBS: usize = 4;

type Check = Result<String, String>;

fn pass_if(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bosonic(f: Family) -> SpectralDensity {
    SpectralDensity::analytic(f, Statistics::BosonicOdd).unwrap()
}

fn fermionic(f: Family) -> SpectralDensity {
    SpectralDensity::analytic(f, Statistics::FermionicFullAxis).unwrap()
}

fn interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Results that several criteria inspect.
struct Shared {
    exact: EngineMapGrid,
    rc: EngineMapGrid,
    set_time: Duration,
    continuation: EngineMapGrid,
    otto: Vec<OttoCurve>,
    redfield_entropy: Vec<f64>,
}

fn set_grids() -> (EngineMapGrid, EngineMapGrid, Duration) {
    let tpl = SetTemplate::default();
    let v = linspace(0.0, 2.0, 20);
    let g = logspace(0.1, 100.0, 20);
    let start = Instant::now();
    let exact = par::with_jobs(JOBS, || par::sweep_map(&tpl, &v, &g, Solver::Exact)).unwrap();
    let rc = par::with_jobs(JOBS, || par::sweep_map(&tpl, &v, &g, Solver::Rc)).unwrap();
    (exact, rc, start.elapsed())
}

fn otto_template(treatment: Treatment, decoupling: Decoupling) -> OttoConfig {
    OttoConfig { treatment, decoupling, ..OttoConfig::default() }
}

fn otto_ratios() -> Vec<f64> {
    linspace(0.52, 0.98, 24)
}

fn otto_curves() -> Vec<OttoCurve> {
    let r = otto_ratios();
    [
        (Treatment::WeakCoupling, Decoupling::Instantaneous),
        (Treatment::ReactionCoordinate, Decoupling::Instantaneous),
        (Treatment::ReactionCoordinate, Decoupling::Adiabatic),
    ]
    .into_iter()
    .map(|(t, d)| par::with_jobs(JOBS, || par::otto_sweep(&otto_template(t, d), &r)).unwrap())
    .collect()
}

// 1
fn catalog_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, "", Vec::new());
    let mut runs = 0;
    for e in catalog::entries() {
        for _ in 0..3 {
            let p: Vec<f64> = e.params.iter().map(|_| rng.random_range(0.3..3.0)).collect();
            let r = verify_against_numeric(e, &p, 1e-7).map_err(|err| format!("{} {p:?}: {err}", e.id))?;
            assert_eq!(r.points, 100);
            if r.worst() > worst.0 {
                worst = (r.worst(), e.id, p);
            }
            runs += 1;
        }
    }
    let t = start.elapsed();
    pass_if(
        worst.0 < CATALOG_TOL && t < CATALOG_BUDGET,
        format!("{runs} mappings, worst relative deviation {:.2e} ({} {:?}), {:.1?}", worst.0, worst.1, worst.2, t),
    )
}

// 2
fn fixed_points() -> Check {
    let mut worst: f64 = 0.0;
    for (g, wm) in [(0.8, 3.0), (2.5, 0.7), (1.0, 10.0)] {
        let r = map_phonon(&bosonic(Family::Rubin { gamma: g, cutoff: wm })).unwrap();
        let want = bosonic(Family::Rubin { gamma: wm / 2f64.sqrt(), cutoff: wm });
        worst = worst.max(normalized_linf(&r.residual, &want, &interior(0.0, wm, 100)));
    }
    for (g, d, e) in [(2.0, 1.5, -0.4), (0.3, 5.0, 3.0), (4.0, 0.2, 1.0)] {
        let r = map_fermionic(&fermionic(Family::Semicircle { gamma: g, delta: d, eps: e })).unwrap();
        let want = fermionic(Family::Semicircle { gamma: d, delta: d, eps: e });
        worst = worst.max(normalized_linf(&r.residual, &want, &interior(e - d, e + d, 100)));
    }
    pass_if(worst < FIXED_POINT_TOL, format!("worst normalized deviation {worst:.2e}"))
}

// 3
fn recursive_convergence() -> Check {
    let grid_points = 4000;
    let run = |d: SpectralDensity, kind: MappingKind, lo: f64, hi: f64, target: SpectralDensity| {
        let grid = GridSpec::new(lo, hi, grid_points);
        let c = recurse(&d, 10, kind, &grid, 1e-6).unwrap();
        let nodes = grid.nodes();
        normalized_linf(&c.terminal_residual, &target, &nodes[1..nodes.len() - 1])
    };
    let wm = 10.0;
    let lin = run(
        bosonic(Family::LinearRigid { gamma: 1.0, cutoff: wm }),
        MappingKind::Phonon,
        0.0,
        wm,
        bosonic(Family::Rubin { gamma: wm / 2f64.sqrt(), cutoff: wm }),
    );
    let boxed = run(
        fermionic(Family::Box { gamma: 1.0, delta: 5.0, eps: 3.0 }),
        MappingKind::Fermionic,
        -2.0,
        8.0,
        fermionic(Family::Semicircle { gamma: 5.0, delta: 5.0, eps: 3.0 }),
    );
    pass_if(
        lin < RECURSION_TOL && boxed < RECURSION_TOL,
        format!("linear->rubin {lin:.2e}, box->semicircle {boxed:.2e}"),
    )
}

// 4
fn triple_dot_spectrum() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let gamma: f64 = rng.random_range(0.1..100.0);
        let delta = rng.random_range(0.001..0.5);
        let eps = 1.0;
        let l = (gamma * delta / 2.0).sqrt();
        let spec = SupersystemSpec::TripleDot(TripleDot { eps, lambda_l: l, lambda_r: l, eps_l: eps, eps_r: eps });
        let h = build_supersystem(&spec).unwrap().hamiltonian.entries;
        // transitions out of the empty state into the one-electron sector
        let one: Vec<usize> = (0..8usize).filter(|i| i.count_ones() == 1).collect();
        let block = CMatrix::from_fn(3, 3, |a, b| h[(one[a], one[b])]);
        let e = eigh(&block).values;
        let split = (gamma * delta).sqrt();
        for (got, want) in e.iter().map(|x| x - h[(0, 0)].re).zip([eps - split, eps, eps + split]) {
            worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
    }
    pass_if(worst < SPECTRUM_TOL, format!("worst relative deviation {worst:.2e}"))
}

// 5
fn gibbs_fixed_point(entropy: &mut Vec<f64>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    let mut lamb: f64 = 0.0;
    for _ in 0..3 {
        let beta = rng.random_range(0.5..2.0);
        let lambda = rng.random_range(0.1..0.8);
        let s = build_supersystem(&SupersystemSpec::TlsRc(TlsRc {
            mu: 1.0,
            lambda,
            omega: 1.2,
            coupling: SystemOperator::SigmaX,
            n_max: 10,
            renormalize: false,
        }))
        .unwrap();
        let residual = bosonic(Family::OhmicSoft { gamma: 0.05, delta: 0.8, eps: 1.5 });
        let bath = [ReservoirSpec::bosonic("bath", beta, residual, s.couplings[0].clone())];
        let target = gibbs(&s.hamiltonian, beta).unwrap().density;
        let solve =
            |opts: RedfieldOptions| steady_state(&build_redfield(&s.hamiltonian, &bath, &opts).unwrap()).unwrap();
        let sec = solve(RedfieldOptions { secular: true, ..Default::default() });
        worst = worst.max(trace_distance(&sec.state, &target));
        // a single bath exchanges no net heat, so its entropy flow vanishes
        entropy.push(-beta * sec.currents[0].energy);
        let full = solve(RedfieldOptions::default());
        lamb = lamb.max(trace_distance(&full.state, &target));
    }
    pass_if(
        worst < GIBBS_TOL,
        format!(
            "secular trace distance {worst:.2e}; with level shifts, non-secular {lamb:.2e} (first order in coupling)"
        ),
    )
}

fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Dot occupation in the global grand-canonical state of a dot hybridized
/// with `modes` discrete lead levels, from the one-body correlation matrix.
fn exact_occupation(eps: f64, lead: &SpectralDensity, beta: f64, mu: f64, modes: usize) -> f64 {
    let star = DiscreteStar::from_density(lead, modes).unwrap();
    let n = modes + 1;
    let mut h = DMatrix::<f64>::zeros(n, n);
    h[(0, 0)] = eps;
    for k in 0..modes {
        h[(k + 1, k + 1)] = star.mode_energies[k];
        h[(0, k + 1)] = star.couplings[k];
        h[(k + 1, 0)] = star.couplings[k];
    }
    let e = SymmetricEigen::new(h);
    (0..n).map(|j| e.eigenvectors[(0, j)].powi(2) * fermi(beta * (e.eigenvalues[j] - mu))).sum()
}

// 6
fn mean_force() -> Check {
    let (delta, beta, eps) = (0.01, 1.0, 1.0);
    let mut worst = (0.0f64, 0.0, 0.0);
    for gamma in [0.5, 4.0, 20.0] {
        let lead = fermionic(Family::Lorentzian { gamma, delta, eps });
        let spec = SupersystemSpec::TripleDot(TripleDot {
            eps,
            lambda_l: (gamma * delta / 2.0).sqrt(),
            lambda_r: 0.0,
            eps_l: eps,
            eps_r: eps,
        });
        for mu in linspace(-1.0, 3.0, 9) {
            let rho = mean_force_state(&spec, beta, mu).unwrap();
            // basis index 1 of the dot factor is the occupied state
            let occ = rho.entries[(1, 1)].re;
            let d = (occ - exact_occupation(eps, &lead, beta, mu, 400)).abs();
            if d > worst.0 {
                worst = (d, gamma, mu);
            }
        }
    }
    pass_if(
        worst.0 < MEAN_FORCE_TOL,
        format!(
            "beta*delta = {}, worst occupation error {:.2e} at Gamma={} mu={}",
            beta * delta,
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

// 7
fn rc_versus_exact(sh: &Shared) -> Check {
    let failed = sh.exact.failures().count() + sh.rc.failures().count();
    let CurrentAgreement { matter, energy, worst_cell } = compare_currents(&sh.exact, &sh.rc).unwrap();
    let ModeAgreement { cells, mismatched, beyond_one_cell } = compare_modes(&sh.exact, &sh.rc).unwrap();
    pass_if(
        failed == 0
            && matter < CURRENT_TOL
            && energy < CURRENT_TOL
            && beyond_one_cell == 0
            && sh.set_time < SET_BUDGET
            && sh.rc.warnings.is_empty(),
        format!(
            "matter {matter:.2e}, energy {energy:.2e} (row-normalized, worst at V={:.3} Gamma={:.3}); \
             modes differ in {mismatched}/{cells} cells, {beyond_one_cell} beyond one cell; {failed} failed; {:.1?}",
            worst_cell.0, worst_cell.1, sh.set_time
        ),
    )
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn has(row: &[Option<Mode>], m: Mode) -> bool {
    row.contains(&Some(m))
}

fn row_max_eta(g: &EngineMapGrid, gi: usize) -> f64 {
    (0..g.v_axis.len()).filter_map(|vi| g.cell(gi, vi).metrics.and_then(|m| m.efficiency)).fold(0.0, f64::max)
}

// 8
fn phase_structure(sh: &Shared) -> Check {
    let tpl = SetTemplate::default();
    let mut notes = Vec::new();

    // (a) at weak coupling the stall voltage and the cooling onset coincide
    let gamma = 0.01;
    let power = |v: f64| tpl.model(v, gamma).currents(tpl.tol).unwrap().power;
    let cooling = |v: f64| tpl.model(v, gamma).currents(tpl.tol).unwrap().heat_left;
    let (vp, vq) = (bisect(0.05, 1.95, power), bisect(0.05, 1.95, cooling));
    let gap = (vp - vq).abs() / vp;
    let row = par::sweep_map(&tpl, &linspace(0.0, 2.0, 20), &[gamma], Solver::Exact).unwrap().row_modes(0);
    let first_other = row.iter().skip(1).find(|m| **m != Some(Mode::Engine));
    let a = gap < STALL_GAP_TOL && first_other == Some(&Some(Mode::Fridge));
    notes.push(format!("(a) V_P={vp:.4} V_Q={vq:.4} gap {gap:.1e}"));

    // (b) some intermediate row separates engine and fridge by dud cells
    let g = &sh.exact;
    let dud_gap = (0..g.gamma_axis.len()).find(|&gi| {
        let row = g.row_modes(gi);
        let last_engine = row.iter().rposition(|m| *m == Some(Mode::Engine));
        let first_fridge = row.iter().position(|m| *m == Some(Mode::Fridge));
        matches!((last_engine, first_fridge), (Some(e), Some(f)) if f > e + 1
            && row[e + 1..f].iter().all(|m| *m == Some(Mode::Dud)))
    });
    let b = dud_gap.is_some();
    notes.push(format!("(b) dud gap at Gamma={:.3}", dud_gap.map_or(f64::NAN, |gi| g.gamma_axis[gi])));

    // (c) the fridge disappears before the top of the grid
    let top = g.gamma_axis.len() - 1;
    let c = has(&g.row_modes(0), Mode::Fridge) && !has(&g.row_modes(top), Mode::Fridge);
    let extinct = (0..=top).find(|&gi| !has(&g.row_modes(gi), Mode::Fridge));
    notes.push(format!("(c) no fridge from Gamma={:.3}", extinct.map_or(f64::NAN, |gi| g.gamma_axis[gi])));

    // (d) ultrastrong continuation: fridge returns, peak efficiency grows
    let k = &sh.continuation;
    let n = k.gamma_axis.len();
    let revival = (0..n).find(|&gi| has(&k.row_modes(gi), Mode::Fridge));
    let (eta_lo, eta_hi) = (row_max_eta(k, 0), row_max_eta(k, n - 1));
    let d = !has(&k.row_modes(0), Mode::Fridge) && has(&k.row_modes(n - 1), Mode::Fridge) && eta_hi > eta_lo;
    notes.push(format!(
        "(d) fridge back at Gamma={:.0}, peak eta {eta_lo:.3} -> {eta_hi:.3}",
        revival.map_or(f64::NAN, |gi| k.gamma_axis[gi])
    ));
    pass_if(a && b && c && d, notes.join("; "))
}

// 9
fn thermodynamic_laws(sh: &Shared) -> Check {
    let tpl = SetTemplate::default();
    let (tl, tr) = tpl.temperatures();
    let (eta_ca, cop_ca) = (carnot_efficiency(tl, tr), carnot_cop(tl, tr));
    let mut states = 0;
    let mut eta_excess = f64::NEG_INFINITY;
    let mut cop_excess = f64::NEG_INFINITY;
    let mut min_entropy = f64::INFINITY;
    for grid in [&sh.exact, &sh.rc, &sh.continuation] {
        for m in grid.cells.iter().filter_map(|c| c.metrics) {
            states += 1;
            min_entropy = min_entropy.min(m.entropy_production);
            if let Some(e) = m.efficiency {
                eta_excess = eta_excess.max(e - eta_ca);
            }
            if let Some(c) = m.cop {
                cop_excess = cop_excess.max(c - cop_ca);
            }
        }
    }
    for s in &sh.redfield_entropy {
        states += 1;
        min_entropy = min_entropy.min(*s);
    }
    let cfg = OttoConfig::default();
    let otto_carnot = 1.0 - cfg.beta_hot / cfg.beta_cold;
    let mut ledger: f64 = 0.0;
    let mut cycles = 0;
    for r in sh.otto.iter().flat_map(|c| &c.reports) {
        cycles += 1;
        ledger = ledger.max(r.ledger_residual());
        if let Some(e) = r.efficiency.filter(|_| r.w_net > 0.0) {
            eta_excess = eta_excess.max(e - otto_carnot);
        }
    }
    pass_if(
        eta_excess <= CARNOT_SLACK
            && cop_excess <= CARNOT_SLACK
            && min_entropy >= ENTROPY_FLOOR
            && ledger <= LEDGER_TOL,
        format!(
            "{states} steady states, {cycles} cycles: max eta-eta_C {eta_excess:.2e}, max COP-COP_C {cop_excess:.2e}, \
             min entropy production {min_entropy:.2e}, worst ledger {ledger:.2e}"
        ),
    )
}

// 10
fn otto_ordering(sh: &Shared) -> Check {
    let [weak, inst, adia] = [&sh.otto[0], &sh.otto[1], &sh.otto[2]];
    let cfg = OttoConfig::default();
    let ratio_t = cfg.beta_hot / cfg.beta_cold;
    let mut notes = Vec::new();

    // weak coupling: W > 0 exactly above T_c/T_h with eta = 1 - r, so the
    // best efficiency is approached where the work vanishes
    let weak_ok = weak.points.iter().all(|p| p.w > 0.0 && (p.eta.unwrap() - (1.0 - p.mu_ratio)).abs() < 1e-12);
    let edge = |r: f64| {
        rctk_core::engines::run_otto(&OttoConfig {
            mu_cold: r * cfg.mu_hot,
            ..otto_template(Treatment::WeakCoupling, Decoupling::Instantaneous)
        })
        .unwrap()
    };
    let at = edge(ratio_t);
    let near = edge(ratio_t + 1e-6);
    let limit_ok =
        at.w_net.abs() < 1e-12 && (near.efficiency.unwrap() - (1.0 - ratio_t)).abs() < 2e-6 && near.w_net.abs() < 1e-5;
    let below = edge(ratio_t - 0.05).w_net < 0.0;
    notes.push(format!("weak W=0 at r={ratio_t}, eta->{:.6}", near.efficiency.unwrap()));

    // pointwise ordering at equal ratios where the reaction-coordinate
    // cycles still run as engines
    let mut order_ok = true;
    let mut compared = 0;
    for ((w, i), a) in weak.points.iter().zip(&inst.points).zip(&adia.points) {
        if let (Some(ei), Some(ea)) = (i.eta.filter(|_| i.w > 0.0), a.eta.filter(|_| a.w > 0.0)) {
            compared += 1;
            order_ok &= ei < ea && ea < w.eta.unwrap();
        }
    }
    let best = |c: &OttoCurve| c.max_efficiency.map(|k| (c.points[k].mu_ratio, c.points[k].eta.unwrap()));
    notes.push(format!("{compared} ratios ordered inst<adiabatic<weak: {order_ok}"));

    // the reaction-coordinate engine stalls at a finite ratio
    let inst_tpl = otto_template(Treatment::ReactionCoordinate, Decoupling::Instantaneous);
    let w_at =
        |r: f64| rctk_core::engines::run_otto(&OttoConfig { mu_cold: r * cfg.mu_hot, ..inst_tpl }).unwrap().w_net;
    let engine_side = inst.points.iter().rev().find(|p| p.w > 0.0).map(|p| p.mu_ratio);
    let stall_side =
        inst.points.iter().find(|p| p.w <= 0.0 && p.mu_ratio > engine_side.unwrap_or(1.0)).map(|p| p.mu_ratio);
    let stall_ok = match (engine_side, stall_side) {
        (Some(lo), Some(hi)) => {
            let r = bisect(lo, hi, w_at);
            let rep = rctk_core::engines::run_otto(&OttoConfig { mu_cold: r * cfg.mu_hot, ..inst_tpl }).unwrap();
            let eta = rep.efficiency.unwrap_or(f64::NAN);
            notes.push(format!("RC stall at r={r:.4}, eta there {eta:.1e}"));
            r < 1.0 && rep.q_hot > 0.0 && eta.abs() < 1e-6
        }
        _ => false,
    };
    notes.push(format!("peaks weak {:?} inst {:?} adiabatic {:?}", best(weak), best(inst), best(adia)));
    pass_if(weak_ok && limit_ok && below && order_ok && compared > 0 && stall_ok, notes.join("; "))
}

// 11
fn symplectic_invariants() -> Check {
    let mut defect: f64 = 0.0;
    for (d, modes) in [
        (bosonic(Family::Rubin { gamma: 1.0, cutoff: 1.0 }), 48),
        (bosonic(Family::LinearRigid { gamma: 0.7, cutoff: 3.0 }), 64),
    ] {
        let star = DiscreteStar::from_density(&d, modes).unwrap();
        for (kind, boson) in [(ChainKind::Phonon, true), (ChainKind::Particle, false)] {
            let c = lanczos_chain(&star, modes, kind).unwrap();
            let (norm, sym) = bogoliubov(&star, &c, kind).defects(boson);
            defect = defect.max(norm).max(sym);
        }
    }
    let mut chain_err: f64 = 0.0;
    let cases = [
        (bosonic(Family::LinearRigid { gamma: 1.0, cutoff: 2.0 }), MappingKind::Phonon, ChainKind::Phonon),
        (bosonic(Family::Rubin { gamma: 0.8, cutoff: 3.0 }), MappingKind::Phonon, ChainKind::Phonon),
        (
            fermionic(Family::Lorentzian { gamma: 2.0, delta: 0.5, eps: 0.3 }),
            MappingKind::Fermionic,
            ChainKind::Particle,
        ),
        (
            fermionic(Family::Semicircle { gamma: 1.0, delta: 2.0, eps: -0.5 }),
            MappingKind::Fermionic,
            ChainKind::Particle,
        ),
    ];
    for (d, mapping, kind) in cases {
        let m = map_with(&d, mapping, 1e-9).unwrap();
        let c = lanczos_chain(&DiscreteStar::from_density(&d, 400).unwrap(), 2, kind).unwrap().chain;
        chain_err = chain_err
            .max((c.hop_couplings[0] - m.lambda).abs() / m.lambda)
            .max((c.site_energies[0] - m.rc_energy).abs() / m.rc_energy.abs().max(1.0));
    }
    pass_if(
        defect < CANONICAL_TOL && chain_err < CHAIN_TOL,
        format!("canonical defect {defect:.2e}; 400-mode chain vs continuum {chain_err:.2e}"),
    )
}

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

fn main() {
    let mut redfield_entropy = Vec::new();
    let mut results: Vec<(u8, &str, Check)> = vec![
        (1, "catalog oracles", guarded(catalog_oracles)),
        (2, "fixed points", guarded(fixed_points)),
        (3, "recursive convergence", guarded(recursive_convergence)),
        (4, "triple-dot spectrum", guarded(triple_dot_spectrum)),
        (5, "Gibbs fixed point", guarded(|| gibbs_fixed_point(&mut redfield_entropy))),
        (6, "mean-force occupation", guarded(mean_force)),
    ];
    let (exact, rc, set_time) = set_grids();
    let continuation = par::with_jobs(JOBS, || {
        par::sweep_map(&SetTemplate::default(), &linspace(0.0, 2.0, 20), &logspace(100.0, 5000.0, 12), Solver::Exact)
    })
    .unwrap();
    let shared = Shared { exact, rc, set_time, continuation, otto: otto_curves(), redfield_entropy };
    results.push((7, "RC vs exact transport", guarded(|| rc_versus_exact(&shared))));
    results.push((8, "phase structure", guarded(|| phase_structure(&shared))));
    results.push((9, "thermodynamic laws", guarded(|| thermodynamic_laws(&shared))));
    results.push((10, "Otto ordering", guarded(|| otto_ordering(&shared))));
    results.push((11, "symplectic invariants", guarded(symplectic_invariants)));

    let mut failed = Vec::new();
    for (id, name, r) in &results {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(*id);
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name}: {detail}");
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
