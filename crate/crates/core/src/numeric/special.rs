//! Special functions not provided by `libm`.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Fermi–Dirac occupation 1/(e^x + 1), overflow-safe.
pub fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Bose–Einstein occupation 1/(e^x − 1) for x ≠ 0.
pub fn bose(x: f64) -> f64 {
    if x > 40.0 {
        (-x).exp()
    } else {
        1.0 / x.exp_m1()
    }
}

/// Dawson's integral F(x) = e^{−x²}∫₀ˣ e^{t²} dt, after Rybicki.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.2 {
        // Σ (−2x²)ⁿ x / (2n+1)!!
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        for n in 1..12 {
            term *= -2.0 * x2 / (2 * n + 1) as f64;
            sum += term;
        }
        return sum;
    }
    if ax > 1e7 {
        return 0.5 / x;
    }
    const H: f64 = 0.2;
    const TERMS: usize = 24;
    let n0 = 2.0 * (0.5 * ax / H).round();
    let xp = ax - n0 * H;
    let mut e1 = (2.0 * xp * H).exp();
    let e2 = e1 * e1;
    let mut d1 = n0 + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for i in 0..TERMS {
        let c = (-((2 * i + 1) as f64 * H).powi(2)).exp();
        sum += c * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    FRAC_1_SQRT_PI * x.signum() * (-xp * xp).exp() * sum
}

/// Complex digamma function via upward recurrence and the Stirling series.
pub fn digamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    if z.re < 0.5 {
        // reflection keeps the recurrence short for negative real parts
        let pi = core::f64::consts::PI;
        let s = (z * pi).sin();
        let c = (z * pi).cos();
        return digamma(Complex64::new(1.0, 0.0) - z) - c / s * pi;
    }
    while z.re < 12.0 {
        acc -= z.inv();
        z += 1.0;
    }
    let iz2 = (z * z).inv();
    let series =
        iz2 * (-1.0 / 12.0 + iz2 * (1.0 / 120.0 + iz2 * (-1.0 / 252.0 + iz2 * (1.0 / 240.0 + iz2 * (-1.0 / 132.0)))));
    acc + z.ln() - z.inv() * 0.5 + series
}
