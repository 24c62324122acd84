//! Born–Markov (Redfield) generators for a supersystem attached to residual
//! reservoirs, their steady states and the reservoir-resolved currents.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DVector, Schur};
use num_complex::Complex64;

use crate::error::Error;
use crate::numeric::{bose, digamma, fermi};
use crate::quantum::{eigh, CMatrix, OperatorMatrix};
use crate::specdens::{Family, SpectralDensity, Statistics};
use crate::Result;

/// Above this many superoperator rows the full spectral check is skipped and
/// uniqueness is judged from the pivots of the linear solve.
const SPECTRAL_CHECK_MAX: usize = 256;

#[derive(Debug, Clone)]
pub struct ReservoirSpec {
    pub label: String,
    pub beta: f64,
    /// Chemical potential; `None` for bosonic reservoirs.
    pub mu: Option<f64>,
    pub residual: SpectralDensity,
    /// Supersystem operator the reservoir couples to: the annihilator of the
    /// attached mode (fermionic) or a Hermitian operator (bosonic).
    pub coupling: OperatorMatrix,
}

impl ReservoirSpec {
    pub fn bosonic(label: impl Into<String>, beta: f64, residual: SpectralDensity, coupling: OperatorMatrix) -> Self {
        Self { label: label.into(), beta, mu: None, residual, coupling }
    }

    pub fn fermionic(
        label: impl Into<String>,
        beta: f64,
        mu: f64,
        residual: SpectralDensity,
        coupling: OperatorMatrix,
    ) -> Self {
        Self { label: label.into(), beta, mu: Some(mu), residual, coupling }
    }

    pub fn statistics(&self) -> Statistics {
        self.residual.statistics
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.beta > 0.0) || self.beta.is_infinite() {
            return Err(Error::invalid("reservoir inverse temperature must be positive and finite"));
        }
        if self.coupling.dim() != dim {
            return Err(Error::invalid("coupling operator does not act on the supersystem"));
        }
        match (self.statistics(), self.mu) {
            (Statistics::FermionicFullAxis, None) => {
                Err(Error::invalid("fermionic reservoir needs a chemical potential"))
            }
            (Statistics::BosonicOdd, Some(_)) => Err(Error::invalid("bosonic reservoirs carry no chemical potential")),
            (Statistics::BosonicOdd, None) if !self.coupling.is_hermitian() => {
                Err(Error::invalid("bosonic coupling operator must be Hermitian"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RedfieldOptions {
    /// Keep the principal-value (level shift) parts of the rates.
    pub lamb_shift: bool,
    /// Drop couplings between coherences of different Bohr frequencies.
    pub secular: bool,
    /// Relative tolerance of the principal-value quadratures.
    pub tol: f64,
    /// Particle number for matter currents.
    pub number: Option<OperatorMatrix>,
}

impl Default for RedfieldOptions {
    fn default() -> Self {
        Self { lamb_shift: true, secular: false, tol: 1e-9, number: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Distinct Bohr frequencies closer than the binning tolerance were merged.
    BohrCollision { merged: usize },
}

/// A Redfield generator in the eigenbasis of the supersystem Hamiltonian,
/// acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub generator: CMatrix,
    /// One dissipative piece per attachment, same layout as `generator`.
    pub dissipators: Vec<CMatrix>,
    pub energies: Vec<f64>,
    /// Eigenvectors of H as columns.
    pub basis: CMatrix,
    pub hamiltonian: OperatorMatrix,
    pub number: Option<OperatorMatrix>,
    pub attachments: Vec<ReservoirSpec>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeadCurrent {
    pub label: String,
    /// Positive into the supersystem.
    pub matter: Option<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub state: OperatorMatrix,
    pub currents: Vec<LeadCurrent>,
    /// ‖L ρ‖ / ‖L‖ on the max norm.
    pub residual_norm: f64,
    pub min_eigenvalue: f64,
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Groups Bohr frequencies within 1e-9·‖H‖ into shared bins.
struct BohrBins {
    index: Vec<usize>,
    values: Vec<f64>,
    merged: usize,
}

impl BohrBins {
    fn new(energies: &[f64]) -> Self {
        let d = energies.len();
        let norm = energies.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
        let tol = 1e-9 * norm;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(d * d);
        for n in 0..d {
            for m in 0..d {
                pairs.push((energies[n] - energies[m], m + d * n));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut index = alloc::vec![0usize; d * d];
        let mut values = Vec::new();
        let mut merged = 0;
        let mut start = 0;
        while start < pairs.len() {
            let mut end = start + 1;
            while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tol {
                end += 1;
            }
            let group = &pairs[start..end];
            let mean = group.iter().map(|p| p.0).sum::<f64>() / group.len() as f64;
            if group[group.len() - 1].0 - group[0].0 > 1e-13 * norm {
                merged += 1;
            }
            for p in group {
                index[p.1] = values.len();
            }
            values.push(mean);
            start = end;
        }
        Self { index, values, merged }
    }

    /// Bin of E_n − E_m.
    fn of(&self, m: usize, n: usize, d: usize) -> usize {
        self.index[m + d * n]
    }
}

/// Half-sided transform ½S(x) + (i/2π)P∫S(ω)/(x−ω)dω of one reservoir
/// correlation spectrum.
type Spectrum = (f64, f64);

fn half_sided((s, pv): Spectrum, lamb: bool) -> Complex64 {
    cx(0.5 * s, if lamb { pv / (2.0 * PI) } else { 0.0 })
}

/// Spectra and principal values at x for one attachment.
enum Correlations<'a> {
    Bosonic { res: &'a ReservoirSpec },
    FermionicFlat { level: f64, beta: f64, mu: f64 },
    Fermionic { res: &'a ReservoirSpec, mu: f64 },
}

impl<'a> Correlations<'a> {
    fn new(res: &'a ReservoirSpec) -> Self {
        match (res.statistics(), res.mu) {
            (Statistics::FermionicFullAxis, Some(mu)) => match res.residual.family() {
                Some(Family::Flat { level }) => Correlations::FermionicFlat { level: *level, beta: res.beta, mu },
                _ => Correlations::Fermionic { res, mu },
            },
            _ => Correlations::Bosonic { res },
        }
    }

    /// Γ(ω)(1 + n(ω)) with the odd continuation of Γ, finite at ω = 0.
    fn bose_spectrum(res: &ReservoirSpec, w: f64) -> f64 {
        let (c, width) = res.residual.geometry();
        let tiny = 1e-9 * (c.abs() + width).max(1e-300);
        let w = if w.abs() < tiny { tiny } else { w };
        res.residual.eval(w) * (1.0 + bose(res.beta * w))
    }

    /// (G, G′) for a bosonic attachment; S′(ω) = S(−ω), so its principal
    /// value is the direct one taken at −x. Principal values are only
    /// computed when `pv_tol` is set.
    fn bosonic(res: &ReservoirSpec, x: f64, pv_tol: Option<f64>) -> Result<(Spectrum, Spectrum)> {
        let s = |w: f64| Self::bose_spectrum(res, w);
        let pv = |y: f64| pv_tol.map_or(Ok(0.0), |tol| res.residual.cauchy_of(&s, y, &[0.0], tol));
        Ok(((s(x), -pv(x)?), (s(-x), pv(-x)?)))
    }

    /// [S12, S21, S′12, S′21] for A₁ = c, A₂ = c†.
    fn fermionic(&self, x: f64, pv_tol: Option<f64>) -> Result<[Spectrum; 4]> {
        match *self {
            Correlations::FermionicFlat { level, beta, mu } => {
                // Re ψ(½ + iβ(y−μ)/2π) is P∫f(ω)/(ω−y)dω up to a cutoff
                // constant that cancels between the four terms.
                let dig = |y: f64| digamma(cx(0.5, beta * (y - mu) / (2.0 * PI))).re;
                let f = |y: f64| fermi(beta * (y - mu));
                let (dp, dm) = (dig(x), dig(-x));
                Ok([
                    (level * f(-x), level * dm),
                    (level * (1.0 - f(x)), level * dp),
                    (level * (1.0 - f(-x)), -level * dm),
                    (level * f(x), -level * dp),
                ])
            }
            Correlations::Fermionic { res, mu } => {
                let g = |w: f64| res.residual.eval(w);
                let f = |w: f64| fermi(res.beta * (w - mu));
                let empty = |w: f64| g(w) * (1.0 - f(w));
                let filled = |w: f64| g(w) * f(w);
                // spectra of reflected argument transform at −x
                let pv = |s: &dyn Fn(f64) -> f64, y: f64| {
                    pv_tol.map_or(Ok(0.0), |tol| res.residual.cauchy_of(s, y, &[mu], tol))
                };
                Ok([
                    (filled(-x), pv(&filled, -x)?),
                    (empty(x), -pv(&empty, x)?),
                    (empty(-x), pv(&empty, -x)?),
                    (filled(x), -pv(&filled, x)?),
                ])
            }
            Correlations::Bosonic { .. } => unreachable!("bosonic attachments use `bosonic`"),
        }
    }
}

/// Assembles L[ρ] = −i[H, ρ] + Σ_α D_α[ρ] in the eigenbasis of H.
pub fn build_redfield(
    h: &OperatorMatrix,
    attachments: &[ReservoirSpec],
    opts: &RedfieldOptions,
) -> Result<Liouvillian> {
    let d = h.dim();
    for a in attachments {
        a.validate(d)?;
    }
    if let Some(n) = &opts.number {
        if n.dim() != d {
            return Err(Error::invalid("number operator does not act on the supersystem"));
        }
    }
    let eig = eigh(&h.entries);
    let v = &eig.vectors;
    let e = &eig.values;
    let bins = BohrBins::new(e);
    let nn = d * d;

    let mut generator = CMatrix::zeros(nn, nn);
    for i in 0..d {
        for j in 0..d {
            let k = i + d * j;
            generator[(k, k)] = cx(0.0, -(e[i] - e[j]));
        }
    }

    let pv_tol = opts.lamb_shift.then_some(opts.tol);
    let mut dissipators = Vec::with_capacity(attachments.len());
    for res in attachments {
        let a = v.adjoint() * &res.coupling.entries * v;
        let corr = Correlations::new(res);
        let mut diss = CMatrix::zeros(nn, nn);
        match corr {
            Correlations::Bosonic { res } => {
                let mut g = Vec::with_capacity(bins.values.len());
                let mut gp = Vec::with_capacity(bins.values.len());
                for &x in &bins.values {
                    let (s, sp) = Correlations::bosonic(res, x, pv_tol)?;
                    g.push(half_sided(s, opts.lamb_shift));
                    gp.push(half_sided(sp, opts.lamb_shift));
                }
                add_channel_pair(&mut diss, &a, &a, &g, &gp, &bins, d);
            }
            _ => {
                let mut g = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
                for &x in &bins.values {
                    let s = corr.fermionic(x, pv_tol)?;
                    for (slot, spec) in g.iter_mut().zip(s) {
                        slot.push(half_sided(spec, opts.lamb_shift));
                    }
                }
                let ad = a.adjoint();
                // (A₁, A₂) = (c, c†): pairs (1,2) and (2,1)
                add_channel_pair(&mut diss, &a, &ad, &g[0], &g[2], &bins, d);
                add_channel_pair(&mut diss, &ad, &a, &g[1], &g[3], &bins, d);
            }
        }
        if opts.secular {
            secularize(&mut diss, &bins, d);
        }
        generator += &diss;
        dissipators.push(diss);
    }

    let warnings =
        if bins.merged > 0 { alloc::vec![Warning::BohrCollision { merged: bins.merged }] } else { Vec::new() };
    Ok(Liouvillian {
        generator,
        dissipators,
        energies: eig.values,
        basis: eig.vectors,
        hamiltonian: h.clone(),
        number: opts.number.clone(),
        attachments: attachments.to_vec(),
        warnings,
    })
}

/// Adds −(A_i Ã ρ − Ã ρ A_i + ρ B̃ A_i − A_i ρ B̃) with
/// Ã_mn = (A_j)_mn G(E_n − E_m) and B̃_mn = (A_j)_mn G′(E_n − E_m).
fn add_channel_pair(
    l: &mut CMatrix,
    ai: &CMatrix,
    aj: &CMatrix,
    g: &[Complex64],
    gp: &[Complex64],
    bins: &BohrBins,
    d: usize,
) {
    let at = CMatrix::from_fn(d, d, |m, n| aj[(m, n)] * g[bins.of(m, n, d)]);
    let bt = CMatrix::from_fn(d, d, |m, n| aj[(m, n)] * gp[bins.of(m, n, d)]);
    add_left(l, &(-(ai * &at)), d);
    add_sandwich(l, &at, ai, d, cx(1.0, 0.0));
    add_right(l, &(-(&bt * ai)), d);
    add_sandwich(l, ai, &bt, d, cx(1.0, 0.0));
}

// Column-stacked index of ρ_ij is i + d·j; A ρ B maps ρ_kl to A_ik B_lj.

fn add_left(l: &mut CMatrix, a: &CMatrix, d: usize) {
    for c in 0..d {
        for k in 0..d {
            for i in 0..d {
                l[(i + d * c, k + d * c)] += a[(i, k)];
            }
        }
    }
}

fn add_right(l: &mut CMatrix, b: &CMatrix, d: usize) {
    for lcol in 0..d {
        for j in 0..d {
            let blj = b[(lcol, j)];
            if blj == cx(0.0, 0.0) {
                continue;
            }
            for i in 0..d {
                l[(i + d * j, i + d * lcol)] += blj;
            }
        }
    }
}

fn add_sandwich(l: &mut CMatrix, a: &CMatrix, b: &CMatrix, d: usize, coef: Complex64) {
    for lcol in 0..d {
        for j in 0..d {
            let blj = b[(lcol, j)] * coef;
            if blj == cx(0.0, 0.0) {
                continue;
            }
            for k in 0..d {
                let col = k + d * lcol;
                for i in 0..d {
                    let aik = a[(i, k)];
                    if aik != cx(0.0, 0.0) {
                        l[(i + d * j, col)] += aik * blj;
                    }
                }
            }
        }
    }
}

fn secularize(l: &mut CMatrix, bins: &BohrBins, d: usize) {
    // ρ_ij oscillates at E_i − E_j
    let freq: Vec<usize> = (0..d * d).map(|k| bins.of(k / d, k % d, d)).collect();
    for col in 0..d * d {
        for row in 0..d * d {
            if freq[row] != freq[col] {
                l[(row, col)] = cx(0.0, 0.0);
            }
        }
    }
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn to_eigen(&self, rho: &CMatrix) -> DVector<Complex64> {
        let r = self.basis.adjoint() * rho * &self.basis;
        DVector::from_column_slice(r.as_slice())
    }

    fn back_from_eigen(&self, v: &DVector<Complex64>) -> CMatrix {
        let d = self.dim();
        let r = CMatrix::from_column_slice(d, d, v.as_slice());
        &self.basis * r * self.basis.adjoint()
    }

    /// L[ρ] in the original basis.
    pub fn apply(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        let out = self.back_from_eigen(&(&self.generator * self.to_eigen(&rho.entries)));
        OperatorMatrix::new(rho.space.clone(), out).expect("shape preserved")
    }

    /// The dissipative piece of attachment `index` applied to ρ.
    pub fn apply_dissipator(&self, index: usize, rho: &OperatorMatrix) -> OperatorMatrix {
        let out = self.back_from_eigen(&(&self.dissipators[index] * self.to_eigen(&rho.entries)));
        OperatorMatrix::new(rho.space.clone(), out).expect("shape preserved")
    }

    /// max over ρ-basis elements of |Tr L[E_kl]|, relative to ‖L‖.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let scale = self.generator.camax().max(1e-300);
        (0..d * d)
            .map(|col| (0..d).map(|i| self.generator[(i + d * i, col)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Null vector of the generator with unit trace, plus currents.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyReport> {
    let d = l.dim();
    let nn = d * d;
    let scale = l.generator.camax().max(1e-300);

    if nn <= SPECTRAL_CHECK_MAX {
        let eig = Schur::new(l.generator.clone())
            .eigenvalues()
            .ok_or(Error::NonConvergent { estimate: f64::NAN, error: f64::NAN })?;
        let kernel = eig.iter().filter(|z| z.norm() <= 1e-9 * scale).count();
        if kernel > 1 {
            return Err(Error::NonUniqueSteadyState { kernel_dim: kernel });
        }
        if let Some(z) = eig.iter().find(|z| z.re > 1e-10 * scale) {
            return Err(Error::NotRelaxing { rate: z.re });
        }
    }

    // the (0,0) row is minus the sum of the other diagonal rows, so it can
    // carry the trace condition instead
    let mut m = l.generator.clone();
    for col in 0..nn {
        m[(0, col)] = cx(0.0, 0.0);
    }
    for i in 0..d {
        m[(0, i + d * i)] = cx(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(nn);
    rhs[0] = cx(1.0, 0.0);
    let lu = m.lu();
    let u = lu.u();
    let piv_max = u.diagonal().iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let piv_min = u.diagonal().iter().fold(f64::INFINITY, |a, z| a.min(z.norm()));
    if !(piv_min > 1e-14 * piv_max) {
        return Err(Error::NonUniqueSteadyState { kernel_dim: 2 });
    }
    let x = lu.solve(&rhs).ok_or(Error::NonUniqueSteadyState { kernel_dim: 2 })?;
    let residual_norm = (&l.generator * &x).camax() / scale;

    let rho_e = CMatrix::from_column_slice(d, d, x.as_slice());
    let rho_e = (&rho_e + rho_e.adjoint()) * cx(0.5, 0.0);
    let min_eigenvalue = eigh(&rho_e).values[0];
    if min_eigenvalue < -1e-8 {
        return Err(Error::PositivityViolation { min_eigenvalue });
    }
    let x = DVector::from_column_slice(rho_e.as_slice());

    let h_e: Vec<f64> = l.energies.clone();
    let n_e = l.number.as_ref().map(|n| l.basis.adjoint() * &n.entries * &l.basis);
    let currents = l
        .attachments
        .iter()
        .zip(&l.dissipators)
        .map(|(res, diss)| {
            let y = diss * &x;
            let energy: f64 = (0..d).map(|i| h_e[i] * y[i + d * i].re).sum();
            let matter = n_e.as_ref().map(|n| {
                let mut s = cx(0.0, 0.0);
                for i in 0..d {
                    for k in 0..d {
                        s += n[(i, k)] * y[k + d * i];
                    }
                }
                s.re
            });
            LeadCurrent { label: res.label.clone(), matter, energy }
        })
        .collect();

    let state = OperatorMatrix::hermitian(l.hamiltonian.space.clone(), l.back_from_eigen(&x))?;
    Ok(SteadyReport { state, currents, residual_norm, min_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        build_supersystem, gibbs, trace_distance, Supersystem, SupersystemSpec, SystemOperator, TlsRc, TripleDot,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triple(gamma: f64, delta: f64) -> Supersystem {
        let l = (gamma * delta / 2.0).sqrt();
        build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
            eps: 1.0,
            lambda_l: l,
            lambda_r: l,
            eps_l: 1.0,
            eps_r: 1.0,
        }))
        .unwrap()
    }

    fn leads(s: &Supersystem, delta: f64, (bl, ml): (f64, f64), (br, mr): (f64, f64)) -> Vec<ReservoirSpec> {
        let flat = SpectralDensity::flat(2.0 * delta).unwrap();
        alloc::vec![
            ReservoirSpec::fermionic("left", bl, ml, flat.clone(), s.couplings[0].clone()),
            ReservoirSpec::fermionic("right", br, mr, flat, s.couplings[1].clone()),
        ]
    }

    fn opts(s: &Supersystem) -> RedfieldOptions {
        RedfieldOptions { number: s.number.clone(), ..Default::default() }
    }

    fn tls(lambda: f64, n_max: usize) -> Supersystem {
        build_supersystem(&SupersystemSpec::TlsRc(TlsRc {
            mu: 1.0,
            lambda,
            omega: 1.2,
            coupling: SystemOperator::SigmaX,
            n_max,
            renormalize: false,
        }))
        .unwrap()
    }

    fn ohmic_residual(strength: f64) -> SpectralDensity {
        SpectralDensity::analytic(Family::OhmicSoft { gamma: strength, delta: 0.8, eps: 1.5 }, Statistics::BosonicOdd)
            .unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng, s: &Supersystem) -> OperatorMatrix {
        let d = s.space.dim();
        let m = CMatrix::from_fn(d, d, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        OperatorMatrix::hermitian(s.space.clone(), (&m + m.adjoint()) * cx(0.5, 0.0)).unwrap()
    }

    #[test]
    fn preserves_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = triple(3.0, 0.05);
        let l = build_redfield(&s.hamiltonian, &leads(&s, 0.05, (2.0, 0.4), (1.0, -0.4)), &opts(&s)).unwrap();
        let b = tls(0.4, 6);
        let res = ReservoirSpec::bosonic("bath", 0.7, ohmic_residual(0.1), b.couplings[0].clone());
        let lb = build_redfield(&b.hamiltonian, &[res], &RedfieldOptions::default()).unwrap();
        for (sys, gen) in [(&s, &l), (&b, &lb)] {
            assert!(gen.trace_defect() < 1e-10, "{}", gen.trace_defect());
            for _ in 0..3 {
                let rho = random_state(&mut rng, sys);
                let out = gen.apply(&rho);
                assert!(out.trace().norm() < 1e-10);
                assert!(out.hermiticity_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_residual_leaves_unitary_part() {
        let s = triple(3.0, 0.05);
        let zero = SpectralDensity::flat(0.0).unwrap();
        let att = alloc::vec![
            ReservoirSpec::fermionic("left", 1.0, 0.0, zero.clone(), s.couplings[0].clone()),
            ReservoirSpec::fermionic("right", 1.0, 0.0, zero, s.couplings[1].clone()),
        ];
        let l = build_redfield(&s.hamiltonian, &att, &opts(&s)).unwrap();
        assert!(l.dissipators.iter().all(|d| d.camax() == 0.0));
        let off_diag = (0..64).flat_map(|i| (0..64).map(move |j| (i, j))).filter(|(i, j)| i != j);
        assert!(off_diag.into_iter().all(|(i, j)| l.generator[(i, j)] == cx(0.0, 0.0)));
    }

    #[test]
    fn golden_rule_rates_for_flat_lead() {
        // decoupled dot: the left lead mode exchanges electrons with its residual
        let s = build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
            eps: 1.0,
            lambda_l: 0.0,
            lambda_r: 0.0,
            eps_l: 0.8,
            eps_r: 1.3,
        }))
        .unwrap();
        let delta = 0.02;
        let (beta, mu) = (1.7, 0.3);
        let l = build_redfield(&s.hamiltonian, &leads(&s, delta, (beta, mu), (1.0, 0.0))[..1], &opts(&s)).unwrap();
        let proj = |idx: usize| {
            let mut m = CMatrix::zeros(8, 8);
            m[(idx, idx)] = cx(1.0, 0.0);
            OperatorMatrix::hermitian(s.space.clone(), m).unwrap()
        };
        // index = 4·n_d + 2·n_L + n_R
        let fill = l.apply_dissipator(0, &proj(0)).entries[(2, 2)].re;
        let empty = l.apply_dissipator(0, &proj(2)).entries[(0, 0)].re;
        let f = fermi(beta * (0.8 - mu));
        assert!((fill - 2.0 * delta * f).abs() < 1e-12);
        assert!((empty - 2.0 * delta * (1.0 - f)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_constant_cancels() {
        // a flat lead treated as a very wide Lorentzian gives the same generator
        let s = triple(3.0, 0.05);
        let flat = build_redfield(&s.hamiltonian, &leads(&s, 0.05, (2.0, 0.4), (1.0, -0.4)), &opts(&s)).unwrap();
        let w = 4000.0;
        let wide = SpectralDensity::analytic(
            Family::Lorentzian { gamma: 0.1, delta: w, eps: 0.0 },
            Statistics::FermionicFullAxis,
        )
        .unwrap();
        let att = alloc::vec![
            ReservoirSpec::fermionic("left", 2.0, 0.4, wide.clone(), s.couplings[0].clone()),
            ReservoirSpec::fermionic("right", 1.0, -0.4, wide, s.couplings[1].clone()),
        ];
        let lor = build_redfield(&s.hamiltonian, &att, &opts(&s)).unwrap();
        let diff = (&flat.generator - &lor.generator).camax();
        // what remains is the O(x/w) slope of the Lorentzian's transform
        assert!(diff < 5e-5, "{diff}");
    }

    #[test]
    fn single_reservoir_relaxes_to_gibbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let beta = rng.random_range(0.5..2.0);
            let lambda = rng.random_range(0.1..0.8);
            let s = tls(lambda, 10);
            let res = ReservoirSpec::bosonic("bath", beta, ohmic_residual(0.05), s.couplings[0].clone());
            let target = gibbs(&s.hamiltonian, beta).unwrap().density;
            let sec = RedfieldOptions { secular: true, ..Default::default() };
            let ss = steady_state(&build_redfield(&s.hamiltonian, core::slice::from_ref(&res), &sec).unwrap()).unwrap();
            assert!(trace_distance(&ss.state, &target) < 1e-6);
            // the dissipative part alone annihilates the Gibbs state even without the secular cut
            let bare = RedfieldOptions { lamb_shift: false, ..Default::default() };
            let ns = steady_state(&build_redfield(&s.hamiltonian, &[res], &bare).unwrap()).unwrap();
            assert!(trace_distance(&ns.state, &target) < 1e-10);
        }
    }

    #[test]
    fn level_shift_deviation_is_first_order() {
        let s = tls(0.5, 10);
        let target = gibbs(&s.hamiltonian, 1.0).unwrap().density;
        let dist = |strength: f64| {
            let res = ReservoirSpec::bosonic("bath", 1.0, ohmic_residual(strength), s.couplings[0].clone());
            let ss =
                steady_state(&build_redfield(&s.hamiltonian, &[res], &RedfieldOptions::default()).unwrap()).unwrap();
            trace_distance(&ss.state, &target)
        };
        let (a, b) = (dist(0.01), dist(0.002));
        assert!(a > 1e-4 && (a / b - 5.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn fermionic_single_lead_is_grand_canonical() {
        let (beta, mu) = (1.3, 0.7);
        let s1 = build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
            eps: 1.0,
            lambda_l: 0.2,
            lambda_r: 0.2,
            eps_l: 1.0,
            eps_r: 1.1,
        }))
        .unwrap();
        let one = &leads(&s1, 0.05, (beta, mu), (1.0, 0.0))[..1];
        let ss = steady_state(
            &build_redfield(&s1.hamiltonian, one, &RedfieldOptions { secular: true, ..opts(&s1) }).unwrap(),
        )
        .unwrap();
        let n = s1.number.as_ref().unwrap();
        let k =
            OperatorMatrix::hermitian(s1.space.clone(), &s1.hamiltonian.entries - &n.entries * cx(mu, 0.0)).unwrap();
        assert!(trace_distance(&ss.state, &gibbs(&k, beta).unwrap().density) < 1e-6);
        for c in &ss.currents {
            assert!(c.energy.abs() < 1e-10 && c.matter.unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn equilibrium_has_no_currents() {
        let s = triple(5.0, 0.01);
        let l = build_redfield(&s.hamiltonian, &leads(&s, 0.01, (1.0, 0.2), (1.0, 0.2)), &opts(&s)).unwrap();
        let ss = steady_state(&l).unwrap();
        for c in &ss.currents {
            assert!(c.energy.abs() < 1e-10 && c.matter.unwrap().abs() < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn currents_conserved_and_entropy_positive() {
        for gamma in [0.1, 1.0, 30.0] {
            let s = triple(gamma, 0.01);
            let (bl, br) = (2.0, 1.0);
            let l = build_redfield(&s.hamiltonian, &leads(&s, 0.01, (bl, 0.3), (br, -0.3)), &opts(&s)).unwrap();
            let ss = steady_state(&l).unwrap();
            let (cl, cr) = (&ss.currents[0], &ss.currents[1]);
            let (ml, mr) = (cl.matter.unwrap(), cr.matter.unwrap());
            assert!((ml + mr).abs() <= 1e-8 * ml.abs().max(1e-300));
            assert!((cl.energy + cr.energy).abs() <= 1e-8 * cl.energy.abs().max(1e-300));
            let ql = cl.energy - 0.3 * ml;
            let qr = cr.energy + 0.3 * mr;
            assert!(-bl * ql - br * qr >= -1e-10);
        }
    }

    #[test]
    fn weak_coupling_is_tight() {
        let s = triple(0.01, 0.01);
        let l = build_redfield(&s.hamiltonian, &leads(&s, 0.01, (2.0, 0.5), (1.0, -0.5)), &opts(&s)).unwrap();
        let ss = steady_state(&l).unwrap();
        let c = &ss.currents[0];
        let ratio = c.energy / c.matter.unwrap();
        assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
    }
}
