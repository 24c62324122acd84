use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Error;
use crate::quantum::{
    adaptive_n_max, build_supersystem, check_truncation, eigh, gibbs, partial_trace, CMatrix, HilbertSpace,
    OperatorMatrix, Supersystem, SupersystemSpec, SystemOperator, TlsRc,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Treatment {
    WeakCoupling,
    ReactionCoordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Decoupling {
    Instantaneous,
    /// Populations frozen in the instantaneous eigenbasis while λ ramps to 0.
    Adiabatic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RcParams {
    pub lambda: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct OttoConfig {
    /// Splitting during the hot isochore.
    pub mu_hot: f64,
    /// Splitting during the cold isochore.
    pub mu_cold: f64,
    pub beta_hot: f64,
    pub beta_cold: f64,
    pub rc_hot: RcParams,
    pub rc_cold: RcParams,
    pub decoupling: Decoupling,
    pub treatment: Treatment,
    pub coupling: SystemOperator,
    /// Oscillator truncation; chosen from the hotter reservoir when absent.
    pub n_max: Option<usize>,
    /// λ steps of the adiabatic decoupling ramp.
    pub ramp_steps: usize,
}

impl Default for OttoConfig {
    fn default() -> Self {
        let rc = RcParams { lambda: 0.05, omega: 1.0 };
        Self {
            mu_hot: 1.0,
            mu_cold: 0.75,
            beta_hot: 1.0,
            beta_cold: 2.0,
            rc_hot: rc,
            rc_cold: rc,
            decoupling: Decoupling::Instantaneous,
            treatment: Treatment::WeakCoupling,
            coupling: SystemOperator::SigmaX,
            n_max: None,
            ramp_steps: 200,
        }
    }
}

impl OttoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_hot > self.mu_cold && self.mu_cold > 0.0 && self.mu_hot.is_finite()) {
            return Err(Error::invalid("need mu_hot > mu_cold > 0"));
        }
        if !(self.beta_cold > self.beta_hot && self.beta_hot > 0.0 && self.beta_cold.is_finite()) {
            return Err(Error::invalid("need beta_cold > beta_hot > 0"));
        }
        for rc in [self.rc_hot, self.rc_cold] {
            if !(rc.lambda >= 0.0 && rc.omega > 0.0 && rc.lambda.is_finite() && rc.omega.is_finite()) {
                return Err(Error::invalid("reaction coordinates need lambda >= 0 and omega > 0"));
            }
        }
        if self.decoupling == Decoupling::Adiabatic && self.ramp_steps < 2 {
            return Err(Error::invalid("adiabatic ramp needs at least two steps"));
        }
        Ok(())
    }

    pub fn variant(&self) -> &'static str {
        match (self.treatment, self.decoupling) {
            (Treatment::WeakCoupling, _) => "weak",
            (Treatment::ReactionCoordinate, Decoupling::Instantaneous) => "rc_instantaneous",
            (Treatment::ReactionCoordinate, Decoupling::Adiabatic) => "rc_adiabatic",
        }
    }
}

/// Energy changes of the working medium around one cycle. Work entries are
/// done on the medium; heats flow into it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleReport {
    pub variant: String,
    pub mu_ratio: f64,
    /// Q_{A′B}.
    pub q_hot: f64,
    pub q_cold: f64,
    pub w_expansion: f64,
    pub w_compression: f64,
    pub w_decouple_hot: f64,
    pub w_decouple_cold: f64,
    pub w_couple_hot: f64,
    pub w_couple_cold: f64,
    /// Energy the hot reservoir spends restoring its reaction coordinate to
    /// thermal equilibrium between cycles; likewise for the cold one.
    pub rethermalize_hot: f64,
    pub rethermalize_cold: f64,
    /// Work output, −(sum of work done on the medium).
    pub w_net: f64,
    pub efficiency: Option<f64>,
}

impl CycleReport {
    pub fn ledger(&self) -> [(&'static str, f64); 10] {
        [
            ("q_hot", self.q_hot),
            ("w_decouple_hot", self.w_decouple_hot),
            ("rethermalize_hot", self.rethermalize_hot),
            ("w_expansion", self.w_expansion),
            ("w_couple_cold", self.w_couple_cold),
            ("q_cold", self.q_cold),
            ("w_decouple_cold", self.w_decouple_cold),
            ("rethermalize_cold", self.rethermalize_cold),
            ("w_compression", self.w_compression),
            ("w_couple_hot", self.w_couple_hot),
        ]
    }

    /// |Σ entries| / Σ |entries|.
    pub fn ledger_residual(&self) -> f64 {
        let l = self.ledger();
        let sum: f64 = l.iter().map(|e| e.1).sum();
        let mag: f64 = l.iter().map(|e| e.1.abs()).sum();
        if mag == 0.0 {
            0.0
        } else {
            sum.abs() / mag
        }
    }
}

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// One isochore's supersystem; with no oscillator for the weak treatment.
struct Stage {
    sup: Option<Supersystem>,
    hs: OperatorMatrix,
    beta: f64,
    omega: f64,
}

fn system_space() -> HilbertSpace {
    HilbertSpace::new(&[("system", 2)]).expect("fixed two-level space")
}

impl Stage {
    fn new(cfg: &OttoConfig, mu: f64, beta: f64, rc: RcParams) -> Result<Self> {
        let hs = OperatorMatrix::hermitian(
            system_space(),
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![cx(0.5 * mu), cx(-0.5 * mu)])),
        )?;
        let sup = match cfg.treatment {
            Treatment::WeakCoupling => None,
            Treatment::ReactionCoordinate => {
                let n_max =
                    cfg.n_max.unwrap_or_else(|| adaptive_n_max(cfg.rc_hot.omega.min(cfg.rc_cold.omega), cfg.beta_hot));
                let t =
                    TlsRc { mu, lambda: rc.lambda, omega: rc.omega, coupling: cfg.coupling, n_max, renormalize: false };
                check_truncation(&t, beta)?;
                Some(build_supersystem(&SupersystemSpec::TlsRc(t))?)
            }
        };
        Ok(Self { sup, hs, beta, omega: rc.omega })
    }

    fn hamiltonian(&self) -> &OperatorMatrix {
        self.sup.as_ref().map_or(&self.hs, |s| &s.hamiltonian)
    }

    /// Reduced system state and the energy carried off by the oscillator.
    fn split(&self, rho: &OperatorMatrix) -> Result<(OperatorMatrix, f64)> {
        match &self.sup {
            None => Ok((rho.clone(), 0.0)),
            Some(s) => Ok((partial_trace(rho, &["system"])?, s.rc.expectation(rho).re)),
        }
    }

    /// System state joined by a thermal oscillator; returns the oscillator energy.
    fn join(&self, rho_s: &OperatorMatrix) -> Result<(OperatorMatrix, f64)> {
        match &self.sup {
            None => Ok((rho_s.clone(), 0.0)),
            Some(s) => {
                let osc_space = s.space.restrict(&["rc"])?;
                let n = osc_space.dim();
                let h_osc = OperatorMatrix::hermitian(
                    osc_space,
                    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        n,
                        (0..n).map(|k| cx(self.omega * k as f64)),
                    )),
                )?;
                let th = gibbs(&h_osc, self.beta)?.density;
                let rho = OperatorMatrix::hermitian(s.space.clone(), rho_s.entries.kronecker(&th.entries))?;
                Ok((rho, h_osc.expectation(&th).re))
            }
        }
    }

    fn interaction_energy(&self, rho: &OperatorMatrix) -> f64 {
        self.sup.as_ref().map_or(0.0, |s| s.interaction.expectation(rho).re)
    }

    /// State after removing the coupling, and the work done on the medium.
    fn decouple(&self, rho: &OperatorMatrix, mode: Decoupling, steps: usize) -> Result<(OperatorMatrix, f64)> {
        let Some(s) = &self.sup else { return Ok((rho.clone(), 0.0)) };
        match mode {
            Decoupling::Instantaneous => Ok((rho.clone(), -self.interaction_energy(rho))),
            Decoupling::Adiabatic => adiabatic_decouple(s, rho, steps),
        }
    }
}

/// Follows each eigenvector of H(λ) as λ → 0 by projecting it onto the
/// eigenspace it overlaps most, then rebuilds the state from the frozen
/// populations.
fn adiabatic_decouple(s: &Supersystem, rho: &OperatorMatrix, steps: usize) -> Result<(OperatorMatrix, f64)> {
    let h0 = &s.system.entries + &s.rc.entries;
    let hi = &s.interaction.entries;
    let start = eigh(&s.hamiltonian.entries);
    let v = &start.vectors;
    let pops: Vec<f64> =
        (0..v.ncols()).map(|n| (v.column(n).adjoint() * &rho.entries * v.column(n))[(0, 0)].re).collect();
    let mut tracked = start.vectors.clone();
    let d = tracked.ncols();
    for k in 1..=steps {
        let frac = 1.0 - k as f64 / steps as f64;
        let h = &h0 + hi * cx(frac);
        let e = eigh(&h);
        let scale = e.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        // clusters of (near-)degenerate eigenvalues
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        while i < d {
            let mut j = i + 1;
            while j < d && e.values[j] - e.values[j - 1] <= 1e-9 * scale {
                j += 1;
            }
            clusters.push((i, j));
            i = j;
        }
        let weight = |n: usize, (a, b): (usize, usize)| -> f64 {
            (a..b).map(|m| (e.vectors.column(m).adjoint() * tracked.column(n))[(0, 0)].norm_sqr()).sum()
        };
        let mut room: Vec<usize> = clusters.iter().map(|(a, b)| b - a).collect();
        let mut choices: Vec<(f64, usize, usize)> = Vec::with_capacity(d * 2);
        for n in 0..d {
            for (c, cl) in clusters.iter().enumerate() {
                let w = weight(n, *cl);
                if w > 1e-3 {
                    choices.push((w, n, c));
                }
            }
        }
        choices.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut assigned = alloc::vec![usize::MAX; d];
        for (_, n, c) in choices {
            if assigned[n] == usize::MAX && room[c] > 0 {
                assigned[n] = c;
                room[c] -= 1;
            }
        }
        if assigned.contains(&usize::MAX) {
            return Err(Error::NonConvergent { estimate: frac, error: f64::NAN });
        }
        let mut next = CMatrix::zeros(d, d);
        for n in 0..d {
            let (a, b) = clusters[assigned[n]];
            let mut col = nalgebra::DVector::<Complex64>::zeros(d);
            for m in a..b {
                let em = e.vectors.column(m);
                col += em * (em.adjoint() * tracked.column(n))[(0, 0)];
            }
            let norm = col.norm();
            next.set_column(n, &(col / cx(norm)));
        }
        tracked = next;
    }
    let mut out = CMatrix::zeros(d, d);
    let mut work = 0.0;
    for (n, p) in pops.iter().enumerate() {
        let col = tracked.column(n);
        out += col * col.adjoint() * cx(*p);
        let e_final = (col.adjoint() * &h0 * col)[(0, 0)].re;
        work += p * (e_final - start.values[n]);
    }
    Ok((OperatorMatrix::hermitian(rho.space.clone(), (&out + out.adjoint()) * cx(0.5))?, work))
}

fn embed_system(stage: &Stage, rho_s: &OperatorMatrix) -> f64 {
    stage.hs.expectation(rho_s).re
}

pub fn run_otto(cfg: &OttoConfig) -> Result<CycleReport> {
    cfg.validate()?;
    let hot = Stage::new(cfg, cfg.mu_hot, cfg.beta_hot, cfg.rc_hot)?;
    let cold = Stage::new(cfg, cfg.mu_cold, cfg.beta_cold, cfg.rc_cold)?;

    // B: end of the hot isochore
    let rho_b = gibbs(hot.hamiltonian(), cfg.beta_hot)?.density;
    let e_b = hot.hamiltonian().expectation(&rho_b).re;
    let (rho_b2, w_dec_h) = hot.decouple(&rho_b, cfg.decoupling, cfg.ramp_steps)?;
    let (rho_s_b, rc_out_h) = hot.split(&rho_b2)?;

    // B′ → C: splitting lowered with populations fixed
    let es_b = embed_system(&hot, &rho_s_b);
    let w_exp = (cfg.mu_cold / cfg.mu_hot - 1.0) * es_b;

    // C → C′: fresh cold oscillator, coupling switched on
    let (rho_c2, rc_in_c) = cold.join(&rho_s_b)?;
    let w_couple_c = cold.interaction_energy(&rho_c2);
    let e_c2 = cold.hamiltonian().expectation(&rho_c2).re;

    // D: end of the cold isochore
    let rho_d = gibbs(cold.hamiltonian(), cfg.beta_cold)?.density;
    let e_d = cold.hamiltonian().expectation(&rho_d).re;
    let q_cold = e_d - e_c2;
    let (rho_d2, w_dec_c) = cold.decouple(&rho_d, cfg.decoupling, cfg.ramp_steps)?;
    let (rho_s_d, rc_out_c) = cold.split(&rho_d2)?;

    // D′ → A
    let es_d = embed_system(&cold, &rho_s_d);
    let w_comp = (cfg.mu_hot / cfg.mu_cold - 1.0) * es_d;

    // A → A′
    let (rho_a2, rc_in_h) = hot.join(&rho_s_d)?;
    let w_couple_h = hot.interaction_energy(&rho_a2);
    let e_a2 = hot.hamiltonian().expectation(&rho_a2).re;
    let q_hot = e_b - e_a2;

    let w_net = -(w_exp + w_comp + w_dec_h + w_dec_c + w_couple_h + w_couple_c);
    Ok(CycleReport {
        variant: cfg.variant().into(),
        mu_ratio: cfg.mu_cold / cfg.mu_hot,
        q_hot,
        q_cold,
        w_expansion: w_exp,
        w_compression: w_comp,
        w_decouple_hot: w_dec_h,
        w_decouple_cold: w_dec_c,
        w_couple_hot: w_couple_h,
        w_couple_cold: w_couple_c,
        rethermalize_hot: rc_in_h - rc_out_h,
        rethermalize_cold: rc_in_c - rc_out_c,
        w_net,
        efficiency: (q_hot > 0.0).then(|| w_net / q_hot),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OttoPoint {
    pub mu_ratio: f64,
    pub w: f64,
    pub eta: Option<f64>,
    pub variant: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OttoCurve {
    pub variant: String,
    pub points: Vec<OttoPoint>,
    pub reports: Vec<CycleReport>,
    /// Index of the point with the largest efficiency among those with W > 0.
    pub max_efficiency: Option<usize>,
}

impl OttoCurve {
    /// Collects finished cycles, one per splitting ratio, in sweep order.
    pub fn from_reports(variant: &str, reports: Vec<CycleReport>) -> Self {
        let points: Vec<OttoPoint> = reports
            .iter()
            .map(|r| OttoPoint { mu_ratio: r.mu_ratio, w: r.w_net, eta: r.efficiency, variant: r.variant.clone() })
            .collect();
        let max_efficiency = points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.eta.filter(|_| p.w > 0.0).map(|e| (i, e)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        Self { variant: variant.into(), points, reports, max_efficiency }
    }
}

pub fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::invalid("splitting ratios must lie in (0, 1)"));
    }
    Ok(())
}

/// Cycles at μ_cold = r·μ_hot for each ratio r in (0, 1).
pub fn otto_sweep(template: &OttoConfig, ratios: &[f64]) -> Result<OttoCurve> {
    check_ratios(ratios)?;
    let reports = ratios
        .iter()
        .map(|&r| run_otto(&OttoConfig { mu_cold: r * template.mu_hot, ..*template }))
        .collect::<Result<Vec<_>>>()?;
    Ok(OttoCurve::from_reports(template.variant(), reports))
}
