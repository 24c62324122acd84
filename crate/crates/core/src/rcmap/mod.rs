//! Single reaction-coordinate extraction steps, their recursion into chains,
//! and the discrete star-to-chain (Lanczos) equivalent.

mod lanczos;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

pub use lanczos::{bogoliubov, lanczos_chain, Bogoliubov, ChainKind, DiscreteStar, LanczosChain};

use crate::error::Error;
use crate::specdens::{GridSpec, MappingKind, SpectralDensity, Statistics, DEFAULT_TOL};
use crate::Result;

/// Outcome of one mapping step.
#[derive(Debug, Clone, PartialEq)]
pub struct RCMapResult {
    pub lambda: f64,
    /// Ω for bosonic mappings, ε_RC for the fermionic one.
    pub rc_energy: f64,
    pub residual: SpectralDensity,
    /// The first moment only converged as a principal value.
    pub principal_value_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainCoefficients {
    pub site_energies: Vec<f64>,
    pub hop_couplings: Vec<f64>,
    pub terminal_residual: SpectralDensity,
    /// Residual after every step, on the recursion grid.
    pub step_residuals: Vec<SpectralDensity>,
}

pub fn map_phonon(d: &SpectralDensity) -> Result<RCMapResult> {
    map_with(d, MappingKind::Phonon, DEFAULT_TOL)
}

pub fn map_particle(d: &SpectralDensity) -> Result<RCMapResult> {
    map_with(d, MappingKind::Particle, DEFAULT_TOL)
}

pub fn map_fermionic(d: &SpectralDensity) -> Result<RCMapResult> {
    map_with(d, MappingKind::Fermionic, DEFAULT_TOL)
}

fn positive(m: f64) -> Result<f64> {
    if m > 0.0 && m.is_finite() {
        Ok(m)
    } else {
        Err(Error::DegenerateDensity)
    }
}

/// One mapping step of the given kind at relative tolerance `tol`.
pub fn map_with(d: &SpectralDensity, kind: MappingKind, tol: f64) -> Result<RCMapResult> {
    match kind {
        MappingKind::Phonon => {
            if d.statistics != Statistics::BosonicOdd {
                return Err(Error::invalid("phonon mapping needs a bosonic density"));
            }
            let m1 = positive(d.moment_tol(1, false, tol)?)?;
            let m3 = positive(d.moment_tol(3, false, tol)?)?;
            let omega = (m3 / m1).sqrt();
            let lambda_sq = m1 / (2.0 * PI * omega);
            Ok(RCMapResult {
                lambda: lambda_sq.sqrt(),
                rc_energy: omega,
                residual: SpectralDensity::residual(d.clone(), lambda_sq, kind, tol),
                principal_value_used: false,
            })
        }
        MappingKind::Particle => {
            let mut half = d.clone();
            if half.support.lo < 0.0 {
                half.support.lo = 0.0;
                half.support.rigid = true;
            }
            let m0 = positive(half.moment_tol(0, false, tol)?)?;
            let m1 = half.moment_tol(1, false, tol)?;
            let lambda_sq = m0 / (2.0 * PI);
            Ok(RCMapResult {
                lambda: lambda_sq.sqrt(),
                rc_energy: m1 / m0,
                residual: SpectralDensity::residual(half, lambda_sq, kind, tol),
                principal_value_used: false,
            })
        }
        MappingKind::Fermionic => {
            if d.statistics != Statistics::FermionicFullAxis {
                return Err(Error::invalid("fermionic mapping needs a full-axis density"));
            }
            let m0 = positive(d.moment_tol(0, false, tol)?)?;
            let (m1, pv) = match d.moment_tol(1, false, tol) {
                Ok(m) => (m, false),
                Err(Error::NeedsPrincipalValue { .. }) => (d.moment_tol(1, true, tol)?, true),
                Err(e) => return Err(e),
            };
            let lambda_sq = m0 / (2.0 * PI);
            Ok(RCMapResult {
                lambda: lambda_sq.sqrt(),
                rc_energy: m1 / m0,
                residual: SpectralDensity::residual(d.clone(), lambda_sq, kind, tol),
                principal_value_used: pv,
            })
        }
    }
}

/// Applies `steps` mappings, re-sampling each residual onto `grid` before
/// the next step.
pub fn recurse(
    d: &SpectralDensity,
    steps: usize,
    kind: MappingKind,
    grid: &GridSpec,
    tol: f64,
) -> Result<ChainCoefficients> {
    if steps == 0 {
        return Err(Error::invalid("recursion needs at least one step"));
    }
    let mut sites = Vec::with_capacity(steps);
    let mut hops = Vec::with_capacity(steps);
    let mut residuals: Vec<SpectralDensity> = Vec::with_capacity(steps);
    let wrap = |step: usize| move |e: Error| Error::Step { step, source: Box::new(e) };
    for step in 0..steps {
        let current = residuals.last().unwrap_or(d);
        let r = map_with(current, kind, tol).map_err(wrap(step))?;
        sites.push(r.rc_energy);
        hops.push(r.lambda);
        residuals.push(r.residual.sample(grid).map_err(wrap(step))?);
    }
    Ok(ChainCoefficients {
        site_energies: sites,
        hop_couplings: hops,
        terminal_residual: residuals.last().cloned().unwrap(),
        step_residuals: residuals,
    })
}

/// max |a − b| / max |b| over `points`.
pub fn normalized_linf(a: &SpectralDensity, b: &SpectralDensity, points: &[f64]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for &w in points {
        let (x, y) = (a.eval(w), b.eval(w));
        num = num.max((x - y).abs());
        den = den.max(y.abs());
    }
    num / den
}
