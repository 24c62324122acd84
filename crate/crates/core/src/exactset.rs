//! Exact currents of a single resonant level between two Lorentzian leads.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::numeric::{fermi, integrate, QuadTol};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lead {
    /// Peak height of the Lorentzian coupling density.
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub beta: f64,
    pub mu: f64,
}

impl Lead {
    pub fn density(&self, w: f64) -> f64 {
        let d2 = self.delta * self.delta;
        self.gamma * d2 / ((w - self.eps).powi(2) + d2)
    }

    /// (1/2π) P∫ Γ(ω′)/(ω − ω′) dω′.
    pub fn shift(&self, w: f64) -> f64 {
        let x = w - self.eps;
        0.5 * self.gamma * self.delta * x / (x * x + self.delta * self.delta)
    }

    pub fn occupation(&self, w: f64) -> f64 {
        fermi(self.beta * (w - self.mu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SetModel {
    pub eps: f64,
    pub left: Lead,
    pub right: Lead,
}

/// Steady-state currents; matter flows positive from left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransportResult {
    pub matter: f64,
    pub energy: f64,
    /// −(μ_L − μ_R)·I_M, the chemical work rate delivered.
    pub power: f64,
    /// I_E − μ_L I_M, entering from the left lead.
    pub heat_left: f64,
    /// −(I_E − μ_R I_M), entering from the right lead.
    pub heat_right: f64,
}

impl TransportResult {
    pub fn from_currents(matter: f64, energy: f64, mu_left: f64, mu_right: f64) -> Self {
        Self {
            matter,
            energy,
            power: -(mu_left - mu_right) * matter,
            heat_left: energy - mu_left * matter,
            heat_right: -(energy - mu_right * matter),
        }
    }
}

impl SetModel {
    pub fn validate(&self) -> Result<()> {
        for l in [&self.left, &self.right] {
            if !(l.gamma > 0.0 && l.delta > 0.0 && l.beta > 0.0) {
                return Err(Error::invalid("leads need positive gamma, delta and beta"));
            }
            if !(l.eps.is_finite() && l.mu.is_finite() && l.beta.is_finite()) {
                return Err(Error::invalid("lead parameters must be finite"));
            }
        }
        if !self.eps.is_finite() {
            return Err(Error::invalid("dot level must be finite"));
        }
        Ok(())
    }

    pub fn level_shift(&self, w: f64) -> f64 {
        self.left.shift(w) + self.right.shift(w)
    }

    pub fn transmission(&self, w: f64) -> f64 {
        let gl = self.left.density(w);
        let gr = self.right.density(w);
        let detune = w - self.eps - self.level_shift(w);
        let width = 0.5 * (gl + gr);
        gl * gr / (detune * detune + width * width)
    }

    fn window(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for l in [&self.left, &self.right] {
            let fw = 40.0 / l.beta;
            let rw = 10.0 * (l.gamma * l.delta).sqrt();
            lo = lo.min(l.mu - fw).min(l.eps - rw);
            hi = hi.max(l.mu + fw).max(l.eps + rw);
        }
        (lo.min(self.eps), hi.max(self.eps))
    }

    /// Interior features: resonances where ω − ε − Λ(ω) changes sign, lead
    /// centres and Fermi edges.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = alloc::vec![lo, hi, self.eps];
        for l in [&self.left, &self.right] {
            pts.extend_from_slice(&[l.eps - l.delta, l.eps, l.eps + l.delta, l.mu]);
        }
        let g = |w: f64| w - self.eps - self.level_shift(w);
        let n = 8000;
        let step = (hi - lo) / n as f64;
        let mut prev = g(lo);
        for i in 1..=n {
            let b = lo + step * i as f64;
            let cur = g(b);
            if prev == 0.0 || prev.signum() != cur.signum() {
                let (mut a, mut c) = (b - step, b);
                for _ in 0..80 {
                    let m = 0.5 * (a + c);
                    if g(a).signum() == g(m).signum() {
                        a = m;
                    } else {
                        c = m;
                    }
                }
                let root = 0.5 * (a + c);
                let width = 0.5 * (self.left.density(root) + self.right.density(root));
                pts.extend_from_slice(&[root - 4.0 * width, root, root + 4.0 * width]);
            }
            prev = cur;
        }
        pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// I_M = (1/2π)∫T(f_L − f_R)dω and I_E with an extra ω, to relative
    /// accuracy `tol` of the unsigned transport window.
    pub fn currents(&self, tol: f64) -> Result<TransportResult> {
        self.validate()?;
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let (lo, hi) = self.window();
        let pts = self.breakpoints(lo, hi);
        let df = |w: f64| self.left.occupation(w) - self.right.occupation(w);
        let qt = QuadTol { abs: 1e-300, rel: tol, max_intervals: 20000 };
        let scale_m = integrate(|w| self.transmission(w) * df(w).abs(), &pts, qt)?;
        let scale_e = integrate(|w| self.transmission(w) * (w * df(w)).abs(), &pts, qt)?;
        let im = integrate(|w| self.transmission(w) * df(w), &pts, qt.with_abs(0.1 * tol * scale_m))?;
        let ie = integrate(|w| w * self.transmission(w) * df(w), &pts, qt.with_abs(0.1 * tol * scale_e))?;
        Ok(TransportResult::from_currents(im / (2.0 * PI), ie / (2.0 * PI), self.left.mu, self.right.mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specdens::{Family, SpectralDensity, Statistics};

    /// The two-terminal operating point with μ_L = −μ_R = V/2.
    fn model(v: f64, gamma: f64) -> SetModel {
        let lead = |beta: f64, mu: f64| Lead { gamma, delta: 0.01, eps: 1.0, beta, mu };
        SetModel { eps: 1.0, left: lead(2.0, 0.5 * v), right: lead(1.0, -0.5 * v) }
    }

    #[test]
    fn transmission_is_bounded() {
        for gamma in [0.1, 3.0, 100.0, 5000.0] {
            let m = model(0.5, gamma);
            for i in 0..20000 {
                let w = -20.0 + 40.0 * i as f64 / 20000.0;
                let t = m.transmission(w);
                assert!((0.0..=1.0 + 1e-12).contains(&t), "{gamma} {w} {t}");
            }
        }
    }

    #[test]
    fn symmetric_resonance_is_transparent() {
        let m = model(0.0, 10.0);
        let g = |w: f64| w - m.eps - m.level_shift(w);
        // the upper split resonance lies between ε + δ and ε + 2√(Γδ)
        let (mut a, mut b) = (1.0 + 0.011, 1.0 + 2.0 * (0.1f64).sqrt());
        assert!(g(a) * g(b) < 0.0);
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if g(a) * g(c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        assert!((m.transmission(0.5 * (a + b)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_matches_numeric_transform() {
        let lead = Lead { gamma: 2.5, delta: 0.3, eps: 0.7, beta: 1.0, mu: 0.0 };
        let d = SpectralDensity::analytic(
            Family::Lorentzian { gamma: 2.5, delta: 0.3, eps: 0.7 },
            Statistics::FermionicFullAxis,
        )
        .unwrap();
        for w in [-2.0, 0.1, 0.7, 0.95, 3.0] {
            let numeric = -0.5 * d.hilbert_pv(w, 1e-9).unwrap();
            assert!((lead.shift(w) - numeric).abs() < 1e-6, "{w}");
        }
    }

    #[test]
    fn equilibrium_carries_nothing() {
        let mut m = model(0.0, 2.0);
        m.left.beta = 1.0;
        let r = m.currents(1e-10).unwrap();
        assert!(r.matter.abs() < 1e-12 && r.energy.abs() < 1e-12);
    }

    #[test]
    fn weak_coupling_is_tight() {
        let r = model(0.6, 0.01).currents(1e-10).unwrap();
        assert!((r.energy / r.matter - 1.0).abs() < 1e-2);
    }

    #[test]
    fn ultrastrong_coupling_cools_again() {
        let r = model(1.0, 5000.0).currents(1e-10).unwrap();
        assert!(r.heat_left > 0.0 && r.power < 0.0, "{r:?}");
    }

    #[test]
    fn halving_tolerance_is_stable() {
        for (v, gamma) in [(0.3, 0.1), (1.2, 10.0), (1.9, 100.0)] {
            let m = model(v, gamma);
            let a = m.currents(1e-8).unwrap();
            let b = m.currents(5e-9).unwrap();
            let scale = a.matter.abs().max(1e-12);
            assert!((a.matter - b.matter).abs() < 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn bookkeeping_identities() {
        let m = model(1.3, 4.0);
        let r = m.currents(1e-10).unwrap();
        assert_eq!(r.power, -(m.left.mu - m.right.mu) * r.matter);
        assert!((r.heat_left + r.heat_right - r.power).abs() < 1e-14);
    }
}
