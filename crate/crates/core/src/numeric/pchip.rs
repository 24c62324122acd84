//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

impl Pchip {
    /// `x` strictly increasing with at least two samples.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = alloc::vec![0.0; n];
        if n == 2 {
            d[0] = m[0];
            d[1] = m[0];
        } else {
            for k in 1..n - 1 {
                if m[k - 1] * m[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], m[0], m[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], m[n - 2], m[n - 3]);
        }
        Self { x, y, d }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn segments(&self) -> usize {
        self.x.len() - 1
    }

    /// Index of the segment holding `t`, clamped to the valid range.
    pub fn locate(&self, t: f64) -> usize {
        let k = self.x.partition_point(|&xi| xi <= t);
        k.clamp(1, self.x.len() - 1) - 1
    }

    /// Coefficients of the cubic on segment `k` in the local variable `t − x_k`.
    pub fn poly(&self, k: usize) -> [f64; 4] {
        let h = self.x[k + 1] - self.x[k];
        let m = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.d[k], self.d[k + 1]);
        [self.y[k], d0, (3.0 * m - 2.0 * d0 - d1) / h, (d0 + d1 - 2.0 * m) / (h * h)]
    }

    /// Interpolated value; zero outside the sampled interval.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if !(t >= self.x[0] && t <= self.x[n - 1]) {
            return 0.0;
        }
        let k = self.locate(t);
        let c = self.poly(k);
        let u = t - self.x[k];
        c[0] + u * (c[1] + u * (c[2] + u * c[3]))
    }

    /// ∫ tⁿ p(t) dt over the sampled interval, exact for n ≤ 4.
    pub fn moment(&self, n: i32) -> f64 {
        // 4-point Gauss–Legendre is exact through degree 7
        const X: [f64; 4] =
            [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 4] =
            [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let mut total = 0.0;
        for k in 0..self.segments() {
            let (a, b) = (self.x[k], self.x[k + 1]);
            let c = self.poly(k);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for i in 0..4 {
                let t = mid + half * X[i];
                let u = t - a;
                let p = c[0] + u * (c[1] + u * (c[2] + u * c[3]));
                total += W[i] * half * t.powi(n) * p;
            }
        }
        total
    }

    /// P∫ p(t)/(t − x) dt over the sampled interval.
    ///
    /// Segments near `x` are integrated exactly after dividing out the pole;
    /// distant ones use 4-point Gauss–Legendre. Returns `None` if `x` sits on
    /// an outer node where the interpolant is nonzero.
    pub fn cauchy(&self, x: f64) -> Option<f64> {
        const X: [f64; 4] =
            [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 4] =
            [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        const NEAR: f64 = 8.0;
        let n = self.x.len();
        if (x == self.x[0] && self.y[0] != 0.0) || (x == self.x[n - 1] && self.y[n - 1] != 0.0) {
            return None;
        }
        let mut total = 0.0;
        for k in 0..n - 1 {
            let (s, t) = (self.x[k], self.x[k + 1]);
            let h = t - s;
            let dist = if x < s {
                s - x
            } else if x > t {
                x - t
            } else {
                0.0
            };
            let c = self.poly(k);
            if dist > NEAR * h {
                let half = 0.5 * h;
                for i in 0..4 {
                    let u = half * (1.0 + X[i]);
                    let p = c[0] + u * (c[1] + u * (c[2] + u * c[3]));
                    total += W[i] * half * p / (s + u - x);
                }
            } else {
                // p(u) = p(z) + (u − z) q(u) with the pole at u = z
                let z = x - s;
                let b2 = c[3];
                let b1 = c[2] + z * b2;
                let b0 = c[1] + z * b1;
                let pz = c[0] + z * b0;
                total += h * (b0 + h * (b1 / 2.0 + h * b2 / 3.0));
                let hi = (t - x).abs();
                let lo = (s - x).abs();
                if hi > 0.0 {
                    total += pz * hi.ln();
                }
                if lo > 0.0 {
                    total -= pz * lo.ln();
                }
            }
        }
        Some(total)
    }
}
