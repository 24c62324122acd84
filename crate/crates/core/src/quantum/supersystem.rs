use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::DVector;
use num_complex::Complex64;

use super::operator::{eigh, gibbs, partial_trace, CMatrix, OperatorMatrix};
use super::space::{HilbertSpace, DEFAULT_DIM_CAP};
use crate::error::Error;
use crate::Result;

/// Two-level operator coupled to the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SystemOperator {
    #[default]
    SigmaX,
    SigmaZ,
    /// (σz + 1)/2, the excited-state projector.
    Excited,
}

/// Two-level system (μ/2)σz with one oscillator reaction coordinate.
/// Basis index 0 of the system factor is the excited state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TlsRc {
    pub mu: f64,
    pub lambda: f64,
    pub omega: f64,
    pub coupling: SystemOperator,
    pub n_max: usize,
    pub renormalize: bool,
}

/// Dot d between two lead modes d_L, d_R, each hopping to the dot.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripleDot {
    pub eps: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
    pub eps_l: f64,
    pub eps_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "variant", rename_all = "snake_case"))]
pub enum SupersystemSpec {
    TlsRc(TlsRc),
    TripleDot(TripleDot),
}

/// A built supersystem. `hamiltonian = system + rc + interaction`.
#[derive(Debug, Clone)]
pub struct Supersystem {
    pub space: HilbertSpace,
    pub hamiltonian: OperatorMatrix,
    /// Operators through which residual reservoirs attach: (b + b†) for the
    /// oscillator, d_L and d_R for the triple dot.
    pub couplings: Vec<OperatorMatrix>,
    pub system: OperatorMatrix,
    pub rc: OperatorMatrix,
    /// Coupling terms, including the optional λ²/Ω·S² counter-term.
    pub interaction: OperatorMatrix,
    /// Total particle number for fermionic supersystems.
    pub number: Option<OperatorMatrix>,
    /// Factors belonging to the original system.
    pub system_labels: Vec<&'static str>,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn diag(v: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|x| c(*x))))
}

impl SupersystemSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SupersystemSpec::TlsRc(t) => {
                if t.n_max < 2 {
                    return Err(Error::invalid("oscillator truncation needs n_max >= 2"));
                }
                if ![t.mu, t.lambda, t.omega].iter().all(|x| x.is_finite()) {
                    return Err(Error::invalid("energies must be finite"));
                }
                if t.lambda < 0.0 || t.omega <= 0.0 {
                    return Err(Error::invalid("need lambda >= 0 and omega > 0"));
                }
            }
            SupersystemSpec::TripleDot(t) => {
                if ![t.eps, t.lambda_l, t.lambda_r, t.eps_l, t.eps_r].iter().all(|x| x.is_finite()) {
                    return Err(Error::invalid("energies must be finite"));
                }
                if t.lambda_l < 0.0 || t.lambda_r < 0.0 {
                    return Err(Error::invalid("couplings must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

pub fn build_supersystem(spec: &SupersystemSpec) -> Result<Supersystem> {
    build_with_cap(spec, DEFAULT_DIM_CAP)
}

pub(crate) fn build_with_cap(spec: &SupersystemSpec, cap: usize) -> Result<Supersystem> {
    spec.validate()?;
    match spec {
        SupersystemSpec::TlsRc(t) => build_tls(t, cap),
        SupersystemSpec::TripleDot(t) => build_triple(t, cap),
    }
}

fn build_tls(t: &TlsRc, cap: usize) -> Result<Supersystem> {
    let n = t.n_max + 1;
    let space = HilbertSpace::with_cap(&[("system", 2), ("rc", n)], cap)?;
    let s_local = match t.coupling {
        SystemOperator::SigmaX => CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        SystemOperator::SigmaZ => diag(&[1.0, -1.0]),
        SystemOperator::Excited => diag(&[1.0, 0.0]),
    };
    let mut x = CMatrix::zeros(n, n);
    for k in 1..n {
        let s = (k as f64).sqrt();
        x[(k - 1, k)] = c(s);
        x[(k, k - 1)] = c(s);
    }
    let number: Vec<f64> = (0..n).map(|k| k as f64).collect();

    let system = OperatorMatrix::embed(&space, "system", &diag(&[0.5 * t.mu, -0.5 * t.mu]))?;
    let rc = OperatorMatrix::embed(&space, "rc", &(diag(&number) * c(t.omega)))?;
    let s_full = OperatorMatrix::embed(&space, "system", &s_local)?;
    let x_full = OperatorMatrix::embed(&space, "rc", &x)?;
    let mut hi = &s_full.entries * &x_full.entries * c(t.lambda);
    if t.renormalize {
        hi += &s_full.entries * &s_full.entries * c(t.lambda * t.lambda / t.omega);
    }
    let interaction = OperatorMatrix::hermitian(space.clone(), hi)?;
    let h = &system.entries + &rc.entries + &interaction.entries;
    let hamiltonian = OperatorMatrix::hermitian(space.clone(), h)?;
    let x_full = OperatorMatrix::hermitian(space.clone(), x_full.entries)?;
    Ok(Supersystem {
        space,
        hamiltonian,
        couplings: alloc::vec![x_full],
        system: OperatorMatrix::hermitian(system.space.clone(), system.entries)?,
        rc: OperatorMatrix::hermitian(rc.space.clone(), rc.entries)?,
        interaction,
        number: None,
        system_labels: alloc::vec!["system"],
    })
}

/// Jordan–Wigner annihilators for modes in factor order.
fn fermion_modes(space: &HilbertSpace) -> Vec<CMatrix> {
    let a = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    let z = diag(&[1.0, -1.0]);
    let count = space.factors().len();
    (0..count)
        .map(|j| {
            let mut m = CMatrix::identity(1, 1);
            for i in 0..count {
                let f = if i < j {
                    z.clone()
                } else if i == j {
                    a.clone()
                } else {
                    CMatrix::identity(2, 2)
                };
                m = m.kronecker(&f);
            }
            m
        })
        .collect()
}

fn build_triple(t: &TripleDot, cap: usize) -> Result<Supersystem> {
    let space = HilbertSpace::with_cap(&[("dot", 2), ("lead_l", 2), ("lead_r", 2)], cap)?;
    let modes = fermion_modes(&space);
    let n_ops: Vec<CMatrix> = modes.iter().map(|m| m.adjoint() * m).collect();
    let system = &n_ops[0] * c(t.eps);
    let rc = &n_ops[1] * c(t.eps_l) + &n_ops[2] * c(t.eps_r);
    let hop = |lambda: f64, lead: &CMatrix| {
        let term = &modes[0] * lead.adjoint() * c(lambda);
        &term + term.adjoint()
    };
    let interaction = hop(t.lambda_l, &modes[1]) + hop(t.lambda_r, &modes[2]);
    let h = &system + &rc + &interaction;
    let number = &n_ops[0] + &n_ops[1] + &n_ops[2];
    let op = |m: CMatrix| OperatorMatrix::hermitian(space.clone(), m);
    Ok(Supersystem {
        hamiltonian: op(h)?,
        couplings: alloc::vec![
            OperatorMatrix::new(space.clone(), modes[1].clone())?,
            OperatorMatrix::new(space.clone(), modes[2].clone())?,
        ],
        system: op(system)?,
        rc: op(rc)?,
        interaction: op(interaction)?,
        number: Some(op(number)?),
        system_labels: alloc::vec!["dot"],
        space,
    })
}

impl Supersystem {
    /// The annihilators (d, d_L, d_R) of a triple dot.
    pub fn fermion_operators(&self) -> Vec<OperatorMatrix> {
        fermion_modes(&self.space)
            .into_iter()
            .map(|m| OperatorMatrix::new(self.space.clone(), m).expect("shape fixed by construction"))
            .collect()
    }
}

/// Smallest n_max ≥ 2 whose thermal oscillator tail e^{−βΩ(n_max+1)} is below 1e-8.
pub fn adaptive_n_max(omega: f64, beta: f64) -> usize {
    let need = (1e8f64).ln() / (beta * omega);
    let n = if need.is_finite() { need.floor() as usize } else { usize::MAX / 2 };
    n.clamp(2, DEFAULT_DIM_CAP / 2 - 1)
}

/// Confirms that raising n_max by half moves the Gibbs populations of the
/// lower half of the spectrum by less than 1e-6.
pub fn check_truncation(t: &TlsRc, beta: f64) -> Result<()> {
    let pops = |n_max: usize| -> Result<Vec<f64>> {
        let s = build_supersystem(&SupersystemSpec::TlsRc(TlsRc { n_max, ..*t }))?;
        let g = gibbs(&s.hamiltonian, beta)?;
        let eig = eigh(&s.hamiltonian.entries);
        let v = &eig.vectors;
        let rho = v.adjoint() * &g.density.entries * v;
        Ok((0..rho.nrows()).map(|i| rho[(i, i)].re).collect())
    };
    let small = pops(t.n_max)?;
    let large = pops(t.n_max + t.n_max.div_ceil(2))?;
    let half = small.len() / 2;
    let worst = small[..half].iter().zip(&large[..half]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if worst < 1e-6 {
        Ok(())
    } else {
        Err(Error::TruncationNotConverged { n_max: t.n_max })
    }
}

/// Reduced system state of the supersystem Gibbs state. For fermionic
/// supersystems the state is grand canonical at chemical potential `mu`.
pub fn mean_force_state(spec: &SupersystemSpec, beta: f64, mu: f64) -> Result<OperatorMatrix> {
    let s = build_supersystem(spec)?;
    let h = match &s.number {
        Some(n) => OperatorMatrix::hermitian(s.space.clone(), &s.hamiltonian.entries - &n.entries * c(mu))?,
        None => s.hamiltonian.clone(),
    };
    let g = gibbs(&h, beta)?;
    partial_trace(&g.density, &s.system_labels)
}
