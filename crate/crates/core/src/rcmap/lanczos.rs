use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector};

use super::ChainCoefficients;
use crate::error::Error;
use crate::numeric::gauss_legendre;
use crate::specdens::{SpectralDensity, Statistics};
use crate::Result;

/// A finite set of reservoir modes coupled directly to the system.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStar {
    pub mode_energies: Vec<f64>,
    /// Real, nonnegative after absorbing phases into the modes.
    pub couplings: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// Position coupling S(a + a†); Bogoliubov transform with V ≠ 0.
    Phonon,
    /// Number-conserving coupling (bosonic particle or fermionic); V = 0.
    Particle,
}

impl DiscreteStar {
    pub fn new(mode_energies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if mode_energies.len() != couplings.len() || mode_energies.is_empty() {
            return Err(Error::invalid("star needs equally many energies and couplings"));
        }
        if couplings.iter().any(|h| !(*h >= 0.0)) {
            return Err(Error::invalid("star couplings must be real and nonnegative"));
        }
        Ok(Self { mode_energies, couplings })
    }

    /// Gauss–Legendre discretisation with 2π h_k² = w_k Γ(ω_k).
    ///
    /// Finite supports use the nodes directly. Unbounded supports go through
    /// ω = c + s·tan(πt/2) (two-sided) or ω = s·tan(π(t+1)/4) (half axis).
    pub fn from_density(d: &SpectralDensity, modes: usize) -> Result<Self> {
        let (t, w) = gauss_legendre(modes);
        let s = d.support;
        let lo = match d.statistics {
            Statistics::BosonicOdd => s.lo.max(0.0),
            Statistics::FermionicFullAxis => s.lo,
        };
        let (center, width) = d.geometry();
        let mut energies = Vec::with_capacity(modes);
        let mut couplings = Vec::with_capacity(modes);
        for (ti, wi) in t.iter().zip(&w) {
            let (x, jac) = if lo.is_finite() && s.hi.is_finite() {
                let half = 0.5 * (s.hi - lo);
                (lo + half * (ti + 1.0), half)
            } else if lo.is_finite() {
                let a = PI * (ti + 1.0) / 4.0;
                let sc = center.max(width);
                (lo + sc * a.tan(), sc * PI / 4.0 / (a.cos() * a.cos()))
            } else {
                let a = PI * ti / 2.0;
                (center + width * a.tan(), width * PI / 2.0 / (a.cos() * a.cos()))
            };
            let g = d.eval(x).max(0.0);
            energies.push(x);
            couplings.push((wi * jac * g / (2.0 * PI)).sqrt());
        }
        Self::new(energies, couplings)
    }
}

/// Bogoliubov blocks of the star-to-chain transform, b_q = Σ_k (u_kq a_k + v_kq a_k†).
#[derive(Debug, Clone, PartialEq)]
pub struct Bogoliubov {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl Bogoliubov {
    /// ‖UU† − VV† − 1‖_max for bosons, ‖UU† + VV† − 1‖_max for fermions,
    /// together with ‖UVᵀ − VUᵀ‖_max.
    pub fn defects(&self, bosonic: bool) -> (f64, f64) {
        let n = self.u.nrows();
        let sign = if bosonic { -1.0 } else { 1.0 };
        let norm = &self.u * self.u.transpose() + sign * (&self.v * self.v.transpose()) - DMatrix::identity(n, n);
        let sym = &self.u * self.v.transpose() - &self.v * self.u.transpose();
        (norm.amax(), sym.amax())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosChain {
    pub chain: ChainCoefficients,
    /// Orthonormal Lanczos vectors as columns (Λ_kq).
    pub basis: DMatrix<f64>,
    /// Set when a Krylov norm underflowed before `modes` sites were built.
    pub breakdown: bool,
}

/// Tridiagonalizes the star Hamiltonian into a chain of at most `modes` sites.
///
/// Particle chains run on diag(ω_k) with seed h_k. Phonon chains run on the
/// frequency-weighted form diag(ω_k²) with seed h_k√ω_k, giving Ω_n = √α_n,
/// λ₁² = Σ h_k²ω_k/Ω₁ and λ_{n+1} = β_n / (2√(Ω_nΩ_{n+1})).
pub fn lanczos_chain(star: &DiscreteStar, modes: usize, kind: ChainKind) -> Result<LanczosChain> {
    let n = star.mode_energies.len();
    if modes == 0 || modes > n {
        return Err(Error::invalid("chain length must be between 1 and the number of star modes"));
    }
    if kind == ChainKind::Phonon && star.mode_energies.iter().any(|w| *w <= 0.0) {
        return Err(Error::invalid("phonon stars need positive mode frequencies"));
    }
    let diag: Vec<f64> = match kind {
        ChainKind::Particle => star.mode_energies.clone(),
        ChainKind::Phonon => star.mode_energies.iter().map(|w| w * w).collect(),
    };
    let seed: DVector<f64> = match kind {
        ChainKind::Particle => DVector::from_vec(star.couplings.clone()),
        ChainKind::Phonon => {
            DVector::from_iterator(n, star.couplings.iter().zip(&star.mode_energies).map(|(h, w)| h * w.sqrt()))
        }
    };
    let seed_norm = seed.norm();
    if seed_norm == 0.0 {
        return Err(Error::DegenerateDensity);
    }
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

    let mut basis: Vec<DVector<f64>> = alloc::vec![seed / seed_norm];
    let mut alpha = Vec::with_capacity(modes);
    let mut beta = Vec::with_capacity(modes);
    let mut breakdown = false;
    loop {
        let q = basis.last().unwrap();
        let mut r = DVector::from_iterator(n, q.iter().zip(&diag).map(|(x, d)| x * d));
        let a = q.dot(&r);
        alpha.push(a);
        if alpha.len() == modes {
            break;
        }
        // full reorthogonalization, twice, against the whole Krylov basis
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r -= b * c;
            }
        }
        let nb = r.norm();
        if nb <= 1e-13 * scale {
            breakdown = true;
            break;
        }
        beta.push(nb);
        basis.push(r / nb);
    }

    let m = alpha.len();
    let (sites, hops) = match kind {
        ChainKind::Particle => {
            let mut hops = alloc::vec![seed_norm];
            hops.extend_from_slice(&beta[..m - 1]);
            (alpha, hops)
        }
        ChainKind::Phonon => {
            let sites: Vec<f64> = alpha.iter().map(|a| a.sqrt()).collect();
            let first = seed_norm * seed_norm / sites[0];
            let mut hops = alloc::vec![first.sqrt()];
            for i in 0..m - 1 {
                hops.push(beta[i] / (2.0 * (sites[i] * sites[i + 1]).sqrt()));
            }
            (sites, hops)
        }
    };
    let lambda = DMatrix::from_columns(&basis[..m]);
    Ok(LanczosChain {
        chain: ChainCoefficients {
            site_energies: sites,
            hop_couplings: hops,
            terminal_residual: SpectralDensity::flat(0.0)?,
            step_residuals: Vec::new(),
        },
        basis: lambda,
        breakdown,
    })
}

/// Bogoliubov blocks for a chain: U = Λ, V = 0 for particle chains, and
/// u_kq, v_kq = ½(√(ω_k/Ω_q) ± √(Ω_q/ω_k)) Λ_kq for phonon chains.
pub fn bogoliubov(star: &DiscreteStar, chain: &LanczosChain, kind: ChainKind) -> Bogoliubov {
    let lam = &chain.basis;
    match kind {
        ChainKind::Particle => Bogoliubov { u: lam.clone(), v: DMatrix::zeros(lam.nrows(), lam.ncols()) },
        ChainKind::Phonon => {
            let om = &chain.chain.site_energies;
            let u = DMatrix::from_fn(lam.nrows(), lam.ncols(), |k, q| {
                let r = (star.mode_energies[k] / om[q]).sqrt();
                0.5 * (r + 1.0 / r) * lam[(k, q)]
            });
            let v = DMatrix::from_fn(lam.nrows(), lam.ncols(), |k, q| {
                let r = (star.mode_energies[k] / om[q]).sqrt();
                0.5 * (r - 1.0 / r) * lam[(k, q)]
            });
            Bogoliubov { u, v }
        }
    }
}
