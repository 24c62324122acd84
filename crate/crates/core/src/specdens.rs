//! Spectral (coupling) densities and the integral transforms the mappings need.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::numeric::quad::{integrate_lower_tail, integrate_raw, integrate_upper_tail, QuadTol};
use crate::numeric::special::dawson;
use crate::numeric::Pchip;
use crate::Result;

/// Default relative tolerance for transforms and moments.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Statistics {
    /// Stored for ω ≥ 0, continued as Γ(−ω) = −Γ(ω).
    BosonicOdd,
    /// Defined on the whole real axis.
    FermionicFullAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    /// The density jumps to exactly zero outside `[lo, hi]`.
    pub rigid: bool,
}

/// Asymptotic fall-off of a density towards an infinite support edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Compact,
    Exponential,
    /// |Γ(ω)| ~ |ω|^(−p)
    Power(f64),
}

/// Closed-form densities: every input and residual shape of the two mapping
/// tables, plus a flat level for wide-band leads.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum Family {
    OhmicSoft { gamma: f64, delta: f64, eps: f64 },
    OhmicSoftResidual { delta: f64, eps: f64 },
    SuperohmicSoft { gamma: f64, delta: f64, eps: f64 },
    SuperohmicSoftResidual { delta: f64, eps: f64 },
    LinearRigid { gamma: f64, cutoff: f64 },
    LinearRigidResidual { cutoff: f64 },
    Rubin { gamma: f64, cutoff: f64 },
    Lorentzian { gamma: f64, delta: f64, eps: f64 },
    LorentzianSq { gamma: f64, delta: f64, eps: f64 },
    Gaussian { gamma: f64, delta: f64, eps: f64 },
    GaussianResidual { delta: f64, eps: f64 },
    Box { gamma: f64, delta: f64, eps: f64 },
    BoxResidual { delta: f64, eps: f64 },
    Parabolic { gamma: f64, delta: f64, eps: f64 },
    ParabolicResidual { delta: f64, eps: f64 },
    Semicircle { gamma: f64, delta: f64, eps: f64 },
    Flat { level: f64 },
}

fn in_band(w: f64, eps: f64, delta: f64) -> Option<f64> {
    let y = (w - eps) / delta;
    (y.abs() <= 1.0).then_some(y)
}

impl Family {
    /// Formula value without statistics handling.
    pub fn raw(&self, w: f64) -> f64 {
        use Family::*;
        match *self {
            OhmicSoft { gamma, delta, eps } => {
                let (d2, e2) = (delta * delta, eps * eps);
                let den = (d2 + (w - eps).powi(2)).powi(2) * (d2 + (w + eps).powi(2)).powi(2);
                8.0 * gamma * d2 * d2 * eps * w * (w * w + d2 + e2) / den
            }
            OhmicSoftResidual { delta, eps } => {
                let (d2, e2, w2) = (delta * delta, eps * eps, w * w);
                let s = 3.0 * d2 + e2;
                8.0 * d2 * delta * w * (d2 + w2 + e2) / (s.sqrt() * (2.0 * w2 * (5.0 * d2 - e2) + s * s + w2 * w2))
            }
            SuperohmicSoft { gamma, delta, eps } => {
                let d2 = delta * delta;
                let den = (d2 + (w - eps).powi(2)).powi(2) * (d2 + (w + eps).powi(2)).powi(2);
                4.0 * gamma * d2 * d2 * delta * w * w * w / den
            }
            SuperohmicSoftResidual { delta, eps } => {
                let (d2, e2, w2) = (delta * delta, eps * eps, w * w);
                16.0 * d2 * delta * w2 * w
                    / ((5.0 * d2 + e2).sqrt() * (d2 * d2 + 2.0 * d2 * (7.0 * w2 + e2) + (w2 - e2).powi(2)))
            }
            LinearRigid { gamma, cutoff } => {
                if w.abs() <= cutoff {
                    gamma * w / cutoff
                } else {
                    0.0
                }
            }
            LinearRigidResidual { cutoff } => {
                if w.abs() >= cutoff {
                    return 0.0;
                }
                let a = (w / cutoff).atanh();
                let wm2 = cutoff * cutoff;
                2.0 * (5.0f64 / 3.0).sqrt() * PI * w * wm2
                    / (3.0 * (PI * PI * w * w + 4.0 * w * a * (w * a - 2.0 * cutoff) + 4.0 * wm2))
            }
            Rubin { gamma, cutoff } => {
                let x = w / cutoff;
                if x.abs() <= 1.0 {
                    gamma * x * (1.0 - x * x).sqrt()
                } else {
                    0.0
                }
            }
            Lorentzian { gamma, delta, eps } => gamma * delta * delta / ((w - eps).powi(2) + delta * delta),
            LorentzianSq { gamma, delta, eps } => {
                let d2 = delta * delta;
                gamma * d2 * d2 / ((w - eps).powi(2) + d2).powi(2)
            }
            Gaussian { gamma, delta, eps } => gamma * (-((w - eps) / delta).powi(2)).exp(),
            GaussianResidual { delta, eps } => {
                let y = (w - eps) / delta;
                let f = dawson(y);
                let num = 2.0 * delta * (-y * y).exp();
                num / (PI.sqrt() * ((-2.0 * y * y).exp() + 4.0 / PI * f * f))
            }
            Box { gamma, delta, eps } => in_band(w, eps, delta).map_or(0.0, |_| gamma),
            BoxResidual { delta, eps } => match in_band(w, eps, delta) {
                Some(y) if y.abs() < 1.0 => {
                    let a = (-y).atanh();
                    4.0 * PI * delta / (PI * PI + 4.0 * a * a)
                }
                _ => 0.0,
            },
            Parabolic { gamma, delta, eps } => in_band(w, eps, delta).map_or(0.0, |y| gamma * (1.0 - y * y)),
            ParabolicResidual { delta, eps } => match in_band(w, eps, delta) {
                Some(y) if y.abs() < 1.0 => {
                    let one = 1.0 - y * y;
                    let x = w - eps;
                    let t = delta * x - (w + delta - eps) * (w - delta - eps) * y.atanh();
                    let d4 = delta.powi(4);
                    8.0 * delta / (3.0 * PI) * one / (4.0 * t * t / (PI * PI * d4) + one * one)
                }
                _ => 0.0,
            },
            Semicircle { gamma, delta, eps } => {
                in_band(w, eps, delta).map_or(0.0, |y| gamma * (1.0 - y * y).max(0.0).sqrt())
            }
            Flat { level } => level,
        }
    }

    /// Natural support of the formula.
    pub fn support(&self) -> Support {
        use Family::*;
        let inf = f64::INFINITY;
        match *self {
            OhmicSoft { .. } | OhmicSoftResidual { .. } | SuperohmicSoft { .. } | SuperohmicSoftResidual { .. } => {
                Support { lo: 0.0, hi: inf, rigid: false }
            }
            LinearRigid { cutoff, .. } | LinearRigidResidual { cutoff } | Rubin { cutoff, .. } => {
                Support { lo: 0.0, hi: cutoff, rigid: true }
            }
            Lorentzian { .. } | LorentzianSq { .. } | Gaussian { .. } | GaussianResidual { .. } | Flat { .. } => {
                Support { lo: -inf, hi: inf, rigid: false }
            }
            Box { delta, eps, .. }
            | BoxResidual { delta, eps }
            | Parabolic { delta, eps, .. }
            | ParabolicResidual { delta, eps }
            | Semicircle { delta, eps, .. } => Support { lo: eps - delta, hi: eps + delta, rigid: true },
        }
    }

    pub fn decay(&self) -> Decay {
        use Family::*;
        match self {
            OhmicSoft { .. } | SuperohmicSoft { .. } => Decay::Power(5.0),
            OhmicSoftResidual { .. } | SuperohmicSoftResidual { .. } => Decay::Power(1.0),
            Lorentzian { .. } => Decay::Power(2.0),
            LorentzianSq { .. } => Decay::Power(4.0),
            Gaussian { .. } | GaussianResidual { .. } => Decay::Exponential,
            Flat { .. } => Decay::Power(0.0),
            _ => Decay::Compact,
        }
    }

    /// (centre, width) used to lay out quadrature panels.
    fn geometry(&self) -> (f64, f64) {
        use Family::*;
        match *self {
            OhmicSoft { delta, eps, .. }
            | OhmicSoftResidual { delta, eps }
            | SuperohmicSoft { delta, eps, .. }
            | SuperohmicSoftResidual { delta, eps }
            | Lorentzian { delta, eps, .. }
            | LorentzianSq { delta, eps, .. }
            | Gaussian { delta, eps, .. }
            | GaussianResidual { delta, eps }
            | Box { delta, eps, .. }
            | BoxResidual { delta, eps }
            | Parabolic { delta, eps, .. }
            | ParabolicResidual { delta, eps }
            | Semicircle { delta, eps, .. } => (eps, delta),
            LinearRigid { cutoff, .. } | LinearRigidResidual { cutoff } | Rubin { cutoff, .. } => {
                (0.5 * cutoff, 0.5 * cutoff)
            }
            Flat { .. } => (0.0, 1.0),
        }
    }

    /// Parameters that must be positive (all except the centre ε, which may
    /// take any sign for fermionic families).
    fn validate(&self) -> Result<()> {
        use Family::*;
        let positive: &[f64] = match self {
            OhmicSoft { gamma, delta, eps } | SuperohmicSoft { gamma, delta, eps } => &[*gamma, *delta, *eps],
            OhmicSoftResidual { delta, eps } | SuperohmicSoftResidual { delta, eps } => &[*delta, *eps],
            LinearRigid { gamma, cutoff } | Rubin { gamma, cutoff } => &[*gamma, *cutoff],
            LinearRigidResidual { cutoff } => &[*cutoff],
            Lorentzian { gamma, delta, .. }
            | LorentzianSq { gamma, delta, .. }
            | Gaussian { gamma, delta, .. }
            | Box { gamma, delta, .. }
            | Parabolic { gamma, delta, .. }
            | Semicircle { gamma, delta, .. } => &[*gamma, *delta],
            GaussianResidual { delta, .. } | BoxResidual { delta, .. } | ParabolicResidual { delta, .. } => &[*delta],
            Flat { level } => {
                if level.is_finite() && *level >= 0.0 {
                    return Ok(());
                }
                return Err(Error::invalid("flat level must be finite and nonnegative"));
            }
        };
        if positive.iter().all(|p| p.is_finite() && *p > 0.0) {
            Ok(())
        } else {
            Err(Error::invalid("family parameters must be finite and positive"))
        }
    }

    /// Multiplies the overall strength; residual shapes carry no strength
    /// parameter and are returned as is.
    /// Multiplies the coupling strength; `None` for residual shapes, whose
    /// normalization is fixed by the mapping.
    pub fn scaled(&self, alpha: f64) -> Option<Family> {
        use Family::*;
        let mut f = self.clone();
        match &mut f {
            OhmicSoft { gamma, .. }
            | SuperohmicSoft { gamma, .. }
            | LinearRigid { gamma, .. }
            | Rubin { gamma, .. }
            | Lorentzian { gamma, .. }
            | LorentzianSq { gamma, .. }
            | Gaussian { gamma, .. }
            | Box { gamma, .. }
            | Parabolic { gamma, .. }
            | Semicircle { gamma, .. } => *gamma *= alpha,
            Flat { level } => *level *= alpha,
            _ => return None,
        }
        Some(f)
    }
}

/// Which Cauchy transform a residual was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MappingKind {
    /// Odd-continued transform over the whole axis.
    Phonon,
    /// Transform restricted to ω > 0.
    Particle,
    /// Full-axis transform, no continuation.
    Fermionic,
}

impl MappingKind {
    /// Power-law exponent lost per mapping step, from the 1/ω² (phonon) or
    /// 1/ω (particle, fermionic) fall-off of the transform.
    fn decay_loss(self) -> f64 {
        match self {
            MappingKind::Phonon => 4.0,
            _ => 2.0,
        }
    }
}

/// A residual density evaluated on demand from its parent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residual {
    pub parent: SpectralDensity,
    pub lambda_sq: f64,
    pub mapping: MappingKind,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DensityKind {
    Analytic(Family),
    Grid(Pchip),
    Residual(Box<Residual>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralDensity {
    pub kind: DensityKind,
    pub statistics: Statistics,
    pub support: Support,
}

/// Sampling layout for grid densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Place samples at cell centres so rigid endpoints are never hit.
    pub half_cell_offset: bool,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points, half_cell_offset: true }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points;
        if self.half_cell_offset {
            let h = (self.hi - self.lo) / n as f64;
            (0..n).map(|i| self.lo + (i as f64 + 0.5) * h).collect()
        } else {
            let h = (self.hi - self.lo) / (n - 1) as f64;
            (0..n).map(|i| self.lo + i as f64 * h).collect()
        }
    }
}

/// A tabulated transform on the sample points of its source.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertTransformResult {
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpectralDensity {
    pub fn analytic(family: Family, statistics: Statistics) -> Result<Self> {
        family.validate()?;
        let mut support = family.support();
        if statistics == Statistics::BosonicOdd {
            support.lo = support.lo.max(0.0);
            if support.hi <= support.lo {
                return Err(Error::invalid("bosonic density has no weight at positive frequencies"));
            }
        }
        Ok(Self { kind: DensityKind::Analytic(family), statistics, support })
    }

    pub fn grid(omega: Vec<f64>, values: Vec<f64>, statistics: Statistics) -> Result<Self> {
        if omega.len() < 2 || omega.len() != values.len() {
            return Err(Error::invalid("grid needs at least two (omega, gamma) samples of equal length"));
        }
        if !omega.windows(2).all(|w| w[1] > w[0]) || !omega.iter().all(|w| w.is_finite()) {
            return Err(Error::invalid("grid frequencies must be finite and strictly increasing"));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid("grid values must be finite and nonnegative"));
        }
        if statistics == Statistics::BosonicOdd && omega[0] < 0.0 {
            return Err(Error::invalid("bosonic grids are stored for omega >= 0 only"));
        }
        let support = Support { lo: omega[0], hi: omega[omega.len() - 1], rigid: true };
        Ok(Self { kind: DensityKind::Grid(Pchip::new(omega, values)), statistics, support })
    }

    /// Residual of a mapping step, evaluated lazily from `parent`.
    pub fn residual(parent: SpectralDensity, lambda_sq: f64, mapping: MappingKind, tol: f64) -> Self {
        let statistics = parent.statistics;
        let mut support = parent.support;
        if mapping == MappingKind::Particle {
            support.lo = support.lo.max(0.0);
        }
        Self {
            kind: DensityKind::Residual(Box::new(Residual { parent, lambda_sq, mapping, tol })),
            statistics,
            support,
        }
    }

    pub fn flat(level: f64) -> Result<Self> {
        Self::analytic(Family::Flat { level }, Statistics::FermionicFullAxis)
    }

    pub fn family(&self) -> Option<&Family> {
        match &self.kind {
            DensityKind::Analytic(f) => Some(f),
            _ => None,
        }
    }

    pub fn decay(&self) -> Decay {
        match &self.kind {
            DensityKind::Analytic(f) => {
                if self.support.lo.is_finite() && self.support.hi.is_finite() {
                    Decay::Compact
                } else {
                    f.decay()
                }
            }
            DensityKind::Grid(_) => Decay::Compact,
            DensityKind::Residual(r) => match r.parent.decay() {
                Decay::Power(p) => Decay::Power(p - r.mapping.decay_loss()),
                d => d,
            },
        }
    }

    /// (centre, width) of the main spectral weight.
    pub fn geometry(&self) -> (f64, f64) {
        match &self.kind {
            DensityKind::Analytic(f) => f.geometry(),
            DensityKind::Grid(_) => {
                let (lo, hi) = (self.support.lo, self.support.hi);
                (0.5 * (lo + hi), 0.5 * (hi - lo))
            }
            DensityKind::Residual(r) => r.parent.geometry(),
        }
    }

    /// Interior points where the density has kinks or peaks.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        let (c, w) = self.geometry();
        let s = self.support;
        for p in [s.lo, s.hi, c - w, c, c + w] {
            if p.is_finite() && p >= s.lo && p <= s.hi {
                pts.push(p);
            }
        }
        if self.statistics == Statistics::BosonicOdd {
            pts.retain(|p| *p >= 0.0);
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Value on the stored half axis (or whole axis for fermionic densities).
    fn raw(&self, w: f64) -> f64 {
        let s = self.support;
        if w < s.lo || w > s.hi {
            return 0.0;
        }
        match &self.kind {
            DensityKind::Analytic(f) => f.raw(w),
            DensityKind::Grid(p) => p.eval(w),
            DensityKind::Residual(r) => r.eval(w),
        }
    }

    /// Γ(ω), with odd continuation for bosonic densities.
    pub fn eval(&self, w: f64) -> f64 {
        match self.statistics {
            Statistics::BosonicOdd => {
                if w >= 0.0 {
                    if w < self.support.lo {
                        0.0
                    } else {
                        self.raw(w)
                    }
                } else {
                    -self.eval(-w)
                }
            }
            Statistics::FermionicFullAxis => self.raw(w),
        }
    }

    /// Rough peak magnitude used to set absolute quadrature floors.
    fn magnitude(&self) -> f64 {
        let (c, w) = self.geometry();
        let (lo, hi) = if self.support.lo.is_finite() && self.support.hi.is_finite() {
            (self.support.lo, self.support.hi)
        } else {
            ((c - 6.0 * w).max(self.support.lo), (c + 6.0 * w).min(self.support.hi))
        };
        let mut m: f64 = 0.0;
        for i in 0..=64 {
            let x = lo + (hi - lo) * (i as f64 + 0.01) / 64.02;
            m = m.max(self.raw(x).abs());
        }
        m
    }

    /// (1/π) P∫ Γ(ω′)/(ω′−ω) dω′ over the statistics-appropriate domain.
    pub fn hilbert_pv(&self, w: f64, tol: f64) -> Result<f64> {
        match self.statistics {
            Statistics::BosonicOdd => Ok(self.cauchy(w, tol)? + self.cauchy(-w, tol)?),
            Statistics::FermionicFullAxis => self.cauchy(w, tol),
        }
    }

    /// (1/π) P∫₀^∞ Γ(ω′)/(ω′−ω) dω′ without continuation, as in the particle mapping.
    pub fn hilbert_half_axis(&self, w: f64, tol: f64) -> Result<f64> {
        if self.statistics == Statistics::FermionicFullAxis && self.support.lo < 0.0 {
            let mut half = self.clone();
            half.support.lo = 0.0;
            half.support.rigid = true;
            return half.cauchy(w, tol);
        }
        self.cauchy(w, tol)
    }

    /// Transforms every sample of a grid density.
    pub fn hilbert_on_grid(&self, tol: f64) -> Result<HilbertTransformResult> {
        let DensityKind::Grid(p) = &self.kind else {
            return Err(Error::invalid("hilbert_on_grid needs a grid density"));
        };
        let omega = p.nodes().to_vec();
        let values = omega.iter().map(|&w| self.hilbert_pv(w, tol)).collect::<Result<Vec<_>>>()?;
        Ok(HilbertTransformResult { omega, values })
    }

    /// (1/π) P∫_support Γ(ω′)/(ω′−ω) dω′ on the stored axis.
    fn cauchy(&self, x: f64, tol: f64) -> Result<f64> {
        if let DensityKind::Analytic(Family::Flat { .. }) = self.kind {
            // symmetric principal value of a constant over the whole axis
            return Ok(0.0);
        }
        if let DensityKind::Grid(p) = &self.kind {
            return p.cauchy(x).map(|v| v / PI).ok_or(Error::EndpointSingularity { omega: x });
        }
        let (center, scale) = self.geometry();
        let mag = self.magnitude();
        if mag == 0.0 {
            return Ok(0.0);
        }
        let qt = QuadTol::rel(tol).with_abs(0.05 * tol * mag);
        let f = |u: f64| self.raw(u);
        cauchy_pv(&f, self.support, x, center, scale, &self.breakpoints(), mag, qt).map(|v| v / PI)
    }

    /// P∫ g(ω)/(ω − x) dω for a numerator g carried by this density's
    /// support (mirrored onto ω < 0 for bosonic densities). `extra_breaks`
    /// marks features of g beyond those of Γ, such as a Fermi edge.
    pub fn cauchy_of(&self, g: &dyn Fn(f64) -> f64, x: f64, extra_breaks: &[f64], tol: f64) -> Result<f64> {
        if let DensityKind::Analytic(Family::Flat { .. }) = self.kind {
            return Err(Error::Divergent { order: 0 });
        }
        let mag = self.magnitude();
        if mag == 0.0 {
            return Ok(0.0);
        }
        let (c, w) = self.geometry();
        let mut breaks = self.breakpoints();
        let (support, center, scale) = match self.statistics {
            Statistics::FermionicFullAxis => (self.support, c, w),
            Statistics::BosonicOdd => {
                let mirrored: Vec<f64> = breaks.iter().map(|b| -b).collect();
                breaks.extend(mirrored);
                let s = Support { lo: -self.support.hi, hi: self.support.hi, rigid: self.support.rigid };
                (s, 0.0, c.abs() + w)
            }
        };
        breaks.extend(extra_breaks.iter().copied().filter(|b| b.is_finite() && *b > support.lo && *b < support.hi));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let qt = QuadTol::rel(tol).with_abs(0.05 * tol * mag);
        cauchy_pv(g, support, x, center, scale, &breaks, mag, qt)
    }

    /// ∫ ωⁿ Γ(ω) dω over ω ≥ 0 (bosonic) or the whole axis (fermionic).
    pub fn moment(&self, n: u32, principal_value: bool) -> Result<f64> {
        self.moment_tol(n, principal_value, DEFAULT_TOL)
    }

    pub fn moment_tol(&self, n: u32, principal_value: bool, tol: f64) -> Result<f64> {
        let s = self.support;
        let two_sided = self.statistics == Statistics::FermionicFullAxis && s.lo.is_infinite() && s.hi.is_infinite();
        let unbounded = s.hi.is_infinite() || (self.statistics == Statistics::FermionicFullAxis && s.lo.is_infinite());
        let mut fold = false;
        if unbounded {
            if let Decay::Power(p) = self.decay() {
                let need = n as f64 + 1.0;
                if p <= need {
                    if p == need && two_sided {
                        if !principal_value {
                            return Err(Error::NeedsPrincipalValue { order: n });
                        }
                        fold = true;
                    } else {
                        return Err(Error::Divergent { order: n });
                    }
                }
            }
        }
        if let DensityKind::Grid(p) = &self.kind {
            return Ok(p.moment(n as i32));
        }
        let (center, scale) = self.geometry();
        let mag = self.magnitude();
        let size = center.abs() + scale;
        let qt = QuadTol::rel(tol).with_abs(1e-3 * tol * mag * size.powi(n as i32 + 1));
        let g = |u: f64| u.powi(n as i32) * self.raw(u);
        if fold {
            let h = |u: f64| g(center + u) + g(center - u);
            return integrate_line(&h, 0.0, f64::INFINITY, &[0.0, scale], 0.0, scale, qt);
        }
        let lo = match self.statistics {
            Statistics::BosonicOdd => s.lo.max(0.0),
            Statistics::FermionicFullAxis => s.lo,
        };
        integrate_line(&g, lo, s.hi, &self.breakpoints(), center, scale, qt)
    }

    /// Samples onto `spec`, keeping statistics. Offset grids also carry the
    /// two interval ends so that a rigid edge keeps its full height.
    pub fn sample(&self, spec: &GridSpec) -> Result<SpectralDensity> {
        let mut omega = spec.nodes();
        if spec.half_cell_offset {
            omega.insert(0, spec.lo);
            omega.push(spec.hi);
        }
        let values = omega.iter().map(|&w| self.raw(w).max(0.0)).collect();
        SpectralDensity::grid(omega, values, self.statistics)
    }

    /// Grid spanning the support (clipped to `window` half-widths around the
    /// centre for unbounded densities).
    pub fn default_grid(&self, points: usize, window: f64) -> GridSpec {
        let (c, w) = self.geometry();
        let mut lo = if self.support.lo.is_finite() { self.support.lo } else { c - window * w };
        let hi = if self.support.hi.is_finite() { self.support.hi } else { c + window * w };
        if self.statistics == Statistics::BosonicOdd {
            lo = lo.max(0.0);
        }
        GridSpec::new(lo, hi, points)
    }

    /// Multiplies the density by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<SpectralDensity> {
        match &self.kind {
            DensityKind::Analytic(f) => {
                let mut d = self.clone();
                let f = f.scaled(alpha).ok_or_else(|| Error::invalid("residual shapes carry no free strength"))?;
                d.kind = DensityKind::Analytic(f);
                Ok(d)
            }
            DensityKind::Grid(p) => SpectralDensity::grid(
                p.nodes().to_vec(),
                p.values().iter().map(|v| v * alpha).collect(),
                self.statistics,
            ),
            DensityKind::Residual(_) => Err(Error::invalid("cannot rescale a lazily evaluated residual")),
        }
    }
}

impl Residual {
    fn transform(&self, w: f64) -> Result<f64> {
        match self.mapping {
            MappingKind::Phonon => self.parent.hilbert_pv(w, self.tol),
            MappingKind::Particle => self.parent.hilbert_half_axis(w, self.tol),
            MappingKind::Fermionic => self.parent.hilbert_pv(w, self.tol),
        }
    }

    /// 4λ²Γ/(H² + Γ²); zero where the parent vanishes or at rigid endpoints.
    pub fn eval(&self, w: f64) -> f64 {
        let g = match self.mapping {
            MappingKind::Particle if w < 0.0 => return 0.0,
            _ => self.parent.eval(w),
        };
        if g == 0.0 {
            return 0.0;
        }
        let h = match self.transform(w) {
            Ok(h) => h,
            Err(Error::EndpointSingularity { .. }) => return 0.0,
            Err(Error::NonConvergent { estimate, .. }) => estimate / PI,
            Err(_) => return 0.0,
        };
        4.0 * self.lambda_sq * g / (h * h + g * g)
    }
}

/// Integral of a regular integrand over [a, b], either end possibly infinite.
pub(crate) fn integrate_line(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    center: f64,
    scale: f64,
    tol: QuadTol,
) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let reach = 40.0 * scale;
    let inner_lo =
        if a.is_finite() { a } else { breaks.iter().copied().chain([center, b]).fold(f64::INFINITY, f64::min) - reach };
    let inner_hi = if b.is_finite() {
        b
    } else {
        breaks.iter().copied().chain([center, inner_lo]).fold(f64::NEG_INFINITY, f64::max) + reach
    };
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    pts.push(inner_lo);
    pts.extend(breaks.iter().copied().filter(|p| *p > inner_lo && *p < inner_hi));
    pts.push(inner_hi);
    let mut total = 0.0;
    let core = integrate_raw(g, &pts, tol);
    check(core)?;
    total += core.value;
    if b.is_infinite() {
        let t = integrate_upper_tail(g, inner_hi, reach, tol);
        check(t)?;
        total += t.value;
    }
    if a.is_infinite() {
        let t = integrate_lower_tail(g, inner_lo, reach, tol);
        check(t)?;
        total += t.value;
    }
    Ok(total)
}

fn check(r: crate::numeric::QuadResult) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::NonConvergent { estimate: r.value, error: r.error })
    }
}

/// P∫_lo^hi f(u)/(u−x) du by singularity subtraction.
///
/// A symmetric window [x−d, x+d] is folded onto ∫₀^d [f(x+u)−f(x−u)]/u du,
/// the longer side continues with [f(u)−f(x)]/(u−x) plus f(x)·log, and the
/// remainder is a regular integral.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cauchy_pv(
    f: &dyn Fn(f64) -> f64,
    support: Support,
    x: f64,
    center: f64,
    scale: f64,
    breaks: &[f64],
    mag: f64,
    tol: QuadTol,
) -> Result<f64> {
    let (lo, hi) = (support.lo, support.hi);
    let regular = |u: f64| f(u) / (u - x);
    if !(x > lo && x < hi) {
        let at_edge = (x == lo && lo.is_finite()) || (x == hi && hi.is_finite());
        if at_edge {
            let inside = if x == lo { x + 1e-9 * scale } else { x - 1e-9 * scale };
            if f(inside).abs() > 1e-9 * mag {
                return Err(Error::EndpointSingularity { omega: x });
            }
        }
        let mut pts: Vec<f64> = breaks.to_vec();
        // steer panels towards a nearby external pole
        if x < lo && lo.is_finite() {
            pts.push(lo + (lo - x).min(scale));
        } else if x > hi && hi.is_finite() {
            pts.push(hi - (x - hi).min(scale));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return integrate_line(&regular, lo, hi, &pts, center, scale, tol);
    }

    let fx = f(x);
    let d = (x - lo).min(hi - x).min(scale);
    let e_right = (hi - x).min(scale.max(d));
    let e_left = (x - lo).min(scale.max(d));

    let mut fold_pts: Vec<f64> = breaks.iter().map(|b| (b - x).abs()).filter(|r| *r > 0.0 && *r < d).collect();
    fold_pts.push(0.0);
    fold_pts.push(d);
    fold_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fold = |u: f64| (f(x + u) - f(x - u)) / u;
    let r = integrate_raw(fold, &fold_pts, tol);
    check(r)?;
    let mut total = r.value;

    let subtracted = |u: f64| (f(u) - fx) / (u - x);
    if e_right > d {
        let (a, b) = (x + d, x + e_right);
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|p| *p > a && *p < b).collect();
        pts.insert(0, a);
        pts.push(b);
        let r = integrate_raw(subtracted, &pts, tol);
        check(r)?;
        total += r.value + fx * (e_right / d).ln();
    }
    if e_left > d {
        let (a, b) = (x - e_left, x - d);
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|p| *p > a && *p < b).collect();
        pts.insert(0, a);
        pts.push(b);
        let r = integrate_raw(subtracted, &pts, tol);
        check(r)?;
        total += r.value - fx * (e_left / d).ln();
    }
    let left_breaks: Vec<f64> = breaks.iter().copied().filter(|p| *p < x - e_left).collect();
    let right_breaks: Vec<f64> = breaks.iter().copied().filter(|p| *p > x + e_right).collect();
    total += integrate_line(&regular, lo, x - e_left, &left_breaks, center.min(x - e_left), scale, tol)?;
    total += integrate_line(&regular, x + e_right, hi, &right_breaks, center.max(x + e_right), scale, tol)?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lorentzian(gamma: f64, delta: f64, eps: f64) -> SpectralDensity {
        SpectralDensity::analytic(Family::Lorentzian { gamma, delta, eps }, Statistics::FermionicFullAxis).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(lorentzian(2.0, 0.5, 1.0).eval(1.0), 2.0);
        let lin =
            SpectralDensity::analytic(Family::LinearRigid { gamma: 1.0, cutoff: 1.0 }, Statistics::BosonicOdd).unwrap();
        assert!((lin.eval(-0.5) + 0.5).abs() < 1e-15);
        assert_eq!(lin.eval(1.5), 0.0);
        assert_eq!(lin.eval(-1.5), 0.0);
    }

    #[test]
    fn zero_grid_transform_vanishes() {
        let w: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let d = SpectralDensity::grid(w, alloc::vec![0.0; 50], Statistics::FermionicFullAxis).unwrap();
        for x in [-1.0, 0.33, 2.0] {
            assert_eq!(d.hilbert_pv(x, 1e-8).unwrap(), 0.0);
        }
    }

    #[test]
    fn box_transform_matches_log_antiderivative() {
        let (g, delta, eps) = (1.3, 2.0, 0.5);
        let d = SpectralDensity::analytic(Family::Box { gamma: g, delta, eps }, Statistics::FermionicFullAxis).unwrap();
        for x in [-1.2, 0.0, 0.5, 2.2, 2.49, 4.0, -3.0] {
            let exact = g / PI * ((eps + delta - x).abs() / (eps - delta - x).abs()).ln();
            let v = d.hilbert_pv(x, 1e-10).unwrap();
            assert!((v - exact).abs() < 1e-8 * (1.0 + exact.abs()), "x={x} {v} {exact}");
        }
        assert!(matches!(d.hilbert_pv(2.5, 1e-8), Err(Error::EndpointSingularity { .. })));
    }

    #[test]
    fn lorentzian_transform_closed_form() {
        // (1/π)P∫ Γδ²/((u−ε)²+δ²)/(u−ω) du = −Γδ(ω−ε)/((ω−ε)²+δ²)
        let (g, delta, eps) = (2.0, 0.5, 1.0);
        let d = lorentzian(g, delta, eps);
        for x in [-30.0, -1.0, 0.9, 1.0, 1.25, 7.0, 400.0] {
            let y = x - eps;
            let exact = -g * delta * y / (y * y + delta * delta);
            let v = d.hilbert_pv(x, 1e-9).unwrap();
            assert!((v - exact).abs() < 1e-7 * g, "x={x} {v} {exact}");
        }
    }

    #[test]
    fn lorentzian_flat_residual() {
        // 4λ²Γ/(H²+Γ²) with λ² = Γδ/2 is the constant 2δ
        let (g, delta, eps) = (2.0, 0.5, 1.0);
        let d = lorentzian(g, delta, eps);
        let l2 = g * delta / 2.0;
        for x in [-3.0, 0.2, 1.0, 2.7] {
            let h = d.hilbert_pv(x, 1e-9).unwrap();
            let gx = d.eval(x);
            let r = 4.0 * l2 * gx / (h * h + gx * gx);
            assert!((r - 2.0 * delta).abs() < 1e-6);
        }
    }

    #[test]
    fn moment_examples() {
        let lin =
            SpectralDensity::analytic(Family::LinearRigid { gamma: 1.0, cutoff: 1.0 }, Statistics::BosonicOdd).unwrap();
        assert!((lin.moment(1, false).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        let (g, delta, eps) = (2.0, 0.5, 1.0);
        let d = lorentzian(g, delta, eps);
        assert!((d.moment(0, false).unwrap() - PI * g * delta).abs() < 1e-6 * PI * g * delta);
        assert_eq!(d.moment(1, false), Err(Error::NeedsPrincipalValue { order: 1 }));
        let m1 = d.moment(1, true).unwrap();
        assert!((m1 - PI * g * delta * eps).abs() < 1e-6);
        assert_eq!(d.moment(2, true), Err(Error::Divergent { order: 2 }));
        let flat = SpectralDensity::flat(1.0).unwrap();
        assert_eq!(flat.moment(0, true), Err(Error::Divergent { order: 0 }));
    }

    #[test]
    fn soft_bosonic_residual_cannot_be_mapped_again() {
        let res = SpectralDensity::analytic(Family::OhmicSoftResidual { delta: 1.0, eps: 2.0 }, Statistics::BosonicOdd)
            .unwrap();
        assert_eq!(res.moment(1, false), Err(Error::Divergent { order: 1 }));
    }

    #[test]
    fn grid_matches_analytic_transform() {
        let fams = [
            (Family::Semicircle { gamma: 1.0, delta: 2.0, eps: 0.5 }, Statistics::FermionicFullAxis),
            (Family::Gaussian { gamma: 1.0, delta: 1.0, eps: 0.0 }, Statistics::FermionicFullAxis),
            (Family::Rubin { gamma: 1.0, cutoff: 3.0 }, Statistics::BosonicOdd),
            (Family::LinearRigid { gamma: 1.0, cutoff: 3.0 }, Statistics::BosonicOdd),
        ];
        for (fam, st) in fams {
            let d = SpectralDensity::analytic(fam.clone(), st).unwrap();
            let g = d.sample(&d.default_grid(2000, 8.0)).unwrap();
            let nodes = g.support;
            for i in 1..20 {
                let x = nodes.lo + (nodes.hi - nodes.lo) * (i as f64 + 0.37) / 20.5;
                let a = d.hilbert_pv(x, 1e-9).unwrap();
                let b = g.hilbert_pv(x, 1e-9).unwrap();
                let scale = d.magnitude();
                assert!((a - b).abs() < 1e-3 * scale.max(a.abs()), "{fam:?} x={x} {a} {b}");
            }
        }
    }

    fn random_grid(vals: &[f64]) -> SpectralDensity {
        let w: Vec<f64> = (0..vals.len()).map(|i| 0.05 + i as f64 * 0.1).collect();
        SpectralDensity::grid(w, vals.to_vec(), Statistics::BosonicOdd).unwrap()
    }

    /// Smooth random density: a few Gaussian bumps on a fine grid.
    fn bumps(spec: &[(f64, f64, f64)]) -> Vec<f64> {
        (0..2000)
            .map(|i| {
                let w = 0.0025 + i as f64 * 0.0025;
                spec.iter().map(|(a, c, s)| a * (-((w - c) / s).powi(2)).exp()).sum::<f64>() * w
            })
            .collect()
    }

    fn fine_grid(vals: Vec<f64>) -> SpectralDensity {
        let w: Vec<f64> = (0..vals.len()).map(|i| 0.0025 + i as f64 * 0.0025).collect();
        SpectralDensity::grid(w, vals, Statistics::BosonicOdd).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transform_is_linear(
            p1 in proptest::collection::vec((0.0f64..2.0, 0.5f64..4.5, 0.2f64..1.0), 1..4),
            p2 in proptest::collection::vec((0.0f64..2.0, 0.5f64..4.5, 0.2f64..1.0), 1..4),
            a in 0.0f64..3.0, b in 0.0f64..3.0, x in 0.01f64..4.9,
        ) {
            let tol = DEFAULT_TOL;
            let (v1, v2) = (bumps(&p1), bumps(&p2));
            let combo: Vec<f64> = v1.iter().zip(&v2).map(|(p, q)| a * p + b * q).collect();
            let mag = combo.iter().fold(0.0f64, |m, v| m.max(*v));
            let lhs = fine_grid(combo).hilbert_pv(x, tol).unwrap();
            let rhs = a * fine_grid(v1).hilbert_pv(x, tol).unwrap() + b * fine_grid(v2).hilbert_pv(x, tol).unwrap();
            prop_assert!((lhs - rhs).abs() <= 2.0 * tol * mag.max(lhs.abs()), "{lhs} {rhs}");
        }

        #[test]
        fn bosonic_transform_is_even(x in 0.01f64..2.9, gamma in 0.1f64..4.0) {
            let d = SpectralDensity::analytic(Family::Rubin { gamma, cutoff: 3.0 }, Statistics::BosonicOdd).unwrap();
            let p = d.hilbert_pv(x, 1e-9).unwrap();
            let m = d.hilbert_pv(-x, 1e-9).unwrap();
            prop_assert!((p - m).abs() < 1e-8 * gamma);
        }

        #[test]
        fn zeroth_moment_nonnegative(vals in proptest::collection::vec(0.0f64..5.0, 4..40)) {
            prop_assert!(random_grid(&vals).moment(0, false).unwrap() >= 0.0);
        }
    }
}
