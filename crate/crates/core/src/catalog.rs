//! Closed-form mapping results for every analytically tractable family.
//!
//! Each entry pairs an input density with its coupling λ², reaction-coordinate
//! energy and residual density, and serves as the oracle for [`crate::rcmap`].

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::rcmap::{self, RCMapResult};
use crate::specdens::{Family, MappingKind, SpectralDensity, Statistics};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub statistics: Statistics,
    pub params: &'static [&'static str],
    /// Whether the residual keeps a rigid cutoff and can be mapped again.
    pub recursable: bool,
    pub formula: &'static str,
}

const SOFT: &[&str] = &["gamma", "delta", "eps"];
const RIGID: &[&str] = &["gamma", "wm"];

static ENTRIES: [CatalogEntry; 10] = [
    CatalogEntry {
        id: "ohmic_soft",
        statistics: Statistics::BosonicOdd,
        params: SOFT,
        recursable: false,
        formula: "8 G d^4 e w (w^2+d^2+e^2) / ([d^2+(w-e)^2]^2 [d^2+(w+e)^2]^2)",
    },
    CatalogEntry {
        id: "superohmic_soft",
        statistics: Statistics::BosonicOdd,
        params: SOFT,
        recursable: false,
        formula: "4 G d^5 w^3 / ([d^2+(w-e)^2]^2 [d^2+(w+e)^2]^2)",
    },
    CatalogEntry {
        id: "linear_rigid",
        statistics: Statistics::BosonicOdd,
        params: RIGID,
        recursable: true,
        formula: "G (w/wm) Theta(wm-w)",
    },
    CatalogEntry {
        id: "rubin",
        statistics: Statistics::BosonicOdd,
        params: RIGID,
        recursable: true,
        formula: "G (w/wm) sqrt(1-w^2/wm^2) Theta(wm-w)",
    },
    CatalogEntry {
        id: "lorentzian",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: false,
        formula: "G d^2 / ((w-e)^2+d^2)",
    },
    CatalogEntry {
        id: "lorentzian_sq",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: false,
        formula: "G d^4 / ((w-e)^2+d^2)^2",
    },
    CatalogEntry {
        id: "gaussian",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: false,
        formula: "G exp(-(w-e)^2/d^2)",
    },
    CatalogEntry {
        id: "box",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: true,
        formula: "G Theta(w, e-d, e+d)",
    },
    CatalogEntry {
        id: "parabolic",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: true,
        formula: "G (1-((w-e)/d)^2) Theta(w, e-d, e+d)",
    },
    CatalogEntry {
        id: "semicircle",
        statistics: Statistics::FermionicFullAxis,
        params: SOFT,
        recursable: true,
        formula: "G sqrt(1-((w-e)/d)^2) Theta(w, e-d, e+d)",
    },
];

pub fn entries() -> &'static [CatalogEntry] {
    &ENTRIES
}

pub fn lookup(id: &str) -> Result<&'static CatalogEntry> {
    ENTRIES.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownFamily(id.to_string()))
}

impl CatalogEntry {
    pub fn mapping(&self) -> MappingKind {
        match self.statistics {
            Statistics::BosonicOdd => MappingKind::Phonon,
            Statistics::FermionicFullAxis => MappingKind::Fermionic,
        }
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(Error::invalid("wrong number of family parameters"));
        }
        Ok(())
    }

    pub fn family(&self, p: &[f64]) -> Result<Family> {
        self.check(p)?;
        Ok(match self.id {
            "ohmic_soft" => Family::OhmicSoft { gamma: p[0], delta: p[1], eps: p[2] },
            "superohmic_soft" => Family::SuperohmicSoft { gamma: p[0], delta: p[1], eps: p[2] },
            "linear_rigid" => Family::LinearRigid { gamma: p[0], cutoff: p[1] },
            "rubin" => Family::Rubin { gamma: p[0], cutoff: p[1] },
            "lorentzian" => Family::Lorentzian { gamma: p[0], delta: p[1], eps: p[2] },
            "lorentzian_sq" => Family::LorentzianSq { gamma: p[0], delta: p[1], eps: p[2] },
            "gaussian" => Family::Gaussian { gamma: p[0], delta: p[1], eps: p[2] },
            "box" => Family::Box { gamma: p[0], delta: p[1], eps: p[2] },
            "parabolic" => Family::Parabolic { gamma: p[0], delta: p[1], eps: p[2] },
            "semicircle" => Family::Semicircle { gamma: p[0], delta: p[1], eps: p[2] },
            _ => unreachable!(),
        })
    }

    pub fn input(&self, p: &[f64]) -> Result<SpectralDensity> {
        SpectralDensity::analytic(self.family(p)?, self.statistics)
    }

    pub fn lambda_sq(&self, p: &[f64]) -> Result<f64> {
        self.check(p)?;
        let (g, d) = (p[0], p[1]);
        Ok(match self.id {
            "ohmic_soft" => g * d * p[2] / (4.0 * (3.0 * d * d + p[2] * p[2]).sqrt()),
            "superohmic_soft" => g * d * d / (16.0 * (5.0 * d * d + p[2] * p[2]).sqrt()),
            "linear_rigid" => (5.0f64 / 3.0).sqrt() * g * d / (6.0 * PI),
            "rubin" => g * d / (16.0 * 2.0f64.sqrt()),
            "lorentzian" => g * d / 2.0,
            "lorentzian_sq" => g * d / 4.0,
            "gaussian" => g * d / (2.0 * PI.sqrt()),
            "box" => g * d / PI,
            "parabolic" => 2.0 * g * d / (3.0 * PI),
            "semicircle" => g * d / 4.0,
            _ => unreachable!(),
        })
    }

    /// Ω for bosonic entries, ε_RC for fermionic ones.
    pub fn rc_energy(&self, p: &[f64]) -> Result<f64> {
        self.check(p)?;
        Ok(match self.id {
            "ohmic_soft" => (3.0 * p[1] * p[1] + p[2] * p[2]).sqrt(),
            "superohmic_soft" => (5.0 * p[1] * p[1] + p[2] * p[2]).sqrt(),
            "linear_rigid" => (3.0f64 / 5.0).sqrt() * p[1],
            "rubin" => p[1] / 2.0f64.sqrt(),
            _ => p[2],
        })
    }

    pub fn residual(&self, p: &[f64]) -> Result<SpectralDensity> {
        self.check(p)?;
        let (d, e) = (p[1], p.get(2).copied().unwrap_or(0.0));
        let fam = match self.id {
            "ohmic_soft" => Family::OhmicSoftResidual { delta: d, eps: e },
            "superohmic_soft" => Family::SuperohmicSoftResidual { delta: d, eps: e },
            "linear_rigid" => Family::LinearRigidResidual { cutoff: d },
            "rubin" => Family::Rubin { gamma: d / 2.0f64.sqrt(), cutoff: d },
            "lorentzian" => Family::Flat { level: 2.0 * d },
            "lorentzian_sq" => Family::Lorentzian { gamma: d, delta: 2.0 * d, eps: e },
            "gaussian" => Family::GaussianResidual { delta: d, eps: e },
            "box" => Family::BoxResidual { delta: d, eps: e },
            "parabolic" => Family::ParabolicResidual { delta: d, eps: e },
            "semicircle" => Family::Semicircle { gamma: d, delta: d, eps: e },
            _ => unreachable!(),
        };
        SpectralDensity::analytic(fam, self.statistics)
    }

    /// Interior comparison points: cell centres across a rigid support, or a
    /// window of ±6 widths around the peak for soft cutoffs.
    pub fn probe_points(&self, p: &[f64], count: usize) -> Result<Vec<f64>> {
        let s = self.input(p)?.support;
        let (lo, hi) = match (self.statistics, s.hi.is_finite()) {
            (_, true) => (s.lo, s.hi),
            (Statistics::BosonicOdd, false) => (0.0, p[2] + 6.0 * p[1]),
            (Statistics::FermionicFullAxis, false) => (p[2] - 6.0 * p[1], p[2] + 6.0 * p[1]),
        };
        let h = (hi - lo) / count as f64;
        Ok((0..count).map(|i| lo + (i as f64 + 0.5) * h).collect())
    }
}

/// Largest relative deviations between numerical and closed-form mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub id: &'static str,
    pub params: Vec<f64>,
    pub lambda_sq_rel: f64,
    pub rc_energy_rel: f64,
    pub residual_rel: f64,
    pub points: usize,
}

impl VerifyReport {
    pub fn worst(&self) -> f64 {
        self.lambda_sq_rel.max(self.rc_energy_rel).max(self.residual_rel)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// Runs the numerical mapping on the closed-form input and compares with the
/// tabulated results on 100 interior points.
pub fn verify_against_numeric(entry: &CatalogEntry, params: &[f64], tol: f64) -> Result<VerifyReport> {
    let input = entry.input(params)?;
    let mapped: RCMapResult = rcmap::map_with(&input, entry.mapping(), tol)?;
    let want_l2 = entry.lambda_sq(params)?;
    let want_rc = entry.rc_energy(params)?;
    let closed = entry.residual(params)?;
    let probes = entry.probe_points(params, 100)?;
    let residual_rel = probes.iter().map(|&w| rel(mapped.residual.eval(w), closed.eval(w))).fold(0.0, f64::max);
    Ok(VerifyReport {
        id: entry.id,
        params: params.to_vec(),
        lambda_sq_rel: rel(mapped.lambda * mapped.lambda, want_l2),
        rc_energy_rel: rel(mapped.rc_energy, want_rc),
        residual_rel,
        points: probes.len(),
    })
}
