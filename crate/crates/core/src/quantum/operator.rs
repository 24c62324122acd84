use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::Error;
use crate::Result;

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub space: HilbertSpace,
    pub entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, entries: CMatrix) -> Result<Self> {
        let d = space.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::invalid("operator shape does not match its space"));
        }
        Ok(Self { space, entries, hermitian: false })
    }

    /// Like [`new`](Self::new) but verifies ‖A − A†‖ ≤ 1e-12·max(1, ‖A‖).
    pub fn hermitian(space: HilbertSpace, entries: CMatrix) -> Result<Self> {
        let mut op = Self::new(space, entries)?;
        let defect = op.hermiticity_defect();
        if defect > HERMITIAN_TOL * op.entries.camax().max(1.0) {
            return Err(Error::invalid("operator flagged Hermitian is not"));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).camax()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self { space, entries: CMatrix::identity(d, d), hermitian: true }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    /// Tr(self · other).
    pub fn expectation(&self, rho: &OperatorMatrix) -> Complex64 {
        let a = &self.entries;
        let b = &rho.entries;
        let n = a.nrows();
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                s += a[(i, k)] * b[(k, i)];
            }
        }
        s
    }

    pub fn commutator_norm(&self, other: &OperatorMatrix) -> f64 {
        (&self.entries * &other.entries - &other.entries * &self.entries).camax()
    }

    /// Embeds a single-factor operator into `space` at `label`.
    pub fn embed(space: &HilbertSpace, label: &str, local: &CMatrix) -> Result<Self> {
        let pos = space.position(label)?;
        let mut out = CMatrix::identity(1, 1);
        for (i, (_, d)) in space.factors().iter().enumerate() {
            let f = if i == pos {
                if local.nrows() != *d || local.ncols() != *d {
                    return Err(Error::invalid("local operator has the wrong dimension"));
                }
                local.clone()
            } else {
                CMatrix::identity(*d, *d)
            };
            out = out.kronecker(&f);
        }
        Self::new(space.clone(), out)
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> Eigen {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| e.eigenvectors[(r, order[c])]);
    Eigen { values, vectors }
}

pub fn min_eigenvalue(rho: &OperatorMatrix) -> f64 {
    eigh(&rho.entries).values.first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub space: HilbertSpace,
    pub beta: f64,
    pub density: OperatorMatrix,
}

/// e^{−βH}/Z through the eigenbasis of H. β = ∞ gives the normalized
/// projector onto the ground space; β = 0 the maximally mixed state.
pub fn gibbs(h: &OperatorMatrix, beta: f64) -> Result<GibbsState> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::invalid("inverse temperature must be nonnegative"));
    }
    let eig = eigh(&h.entries);
    let e0 = eig.values[0];
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|e| {
            if beta.is_infinite() {
                if e - e0 <= 1e-10 * scale {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-beta * (e - e0)).exp()
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let p = DVector::from_iterator(weights.len(), weights.iter().map(|w| Complex64::new(w / z, 0.0)));
    let v = &eig.vectors;
    let rho = v * CMatrix::from_diagonal(&p) * v.adjoint();
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(GibbsState { space: h.space.clone(), beta, density: OperatorMatrix::hermitian(h.space.clone(), rho)? })
}

/// Traces out every factor not listed in `keep`.
pub fn partial_trace(rho: &OperatorMatrix, keep: &[&str]) -> Result<OperatorMatrix> {
    let space = &rho.space;
    let kept = space.restrict(keep)?;
    let dims: Vec<usize> = space.factors().iter().map(|(_, d)| *d).collect();
    let keep_mask: Vec<bool> = space.factors().iter().map(|(l, _)| kept.position(l).is_ok()).collect();
    let n = rho.dim();
    let dk = kept.dim();

    // multi-index helpers: split a full index into (kept index, traced index)
    let split = |mut idx: usize| -> (usize, usize) {
        let mut k = 0;
        let mut t = 0;
        let mut kmul = 1;
        let mut tmul = 1;
        for f in (0..dims.len()).rev() {
            let digit = idx % dims[f];
            idx /= dims[f];
            if keep_mask[f] {
                k += digit * kmul;
                kmul *= dims[f];
            } else {
                t += digit * tmul;
                tmul *= dims[f];
            }
        }
        (k, t)
    };
    let parts: Vec<(usize, usize)> = (0..n).map(split).collect();
    let mut out = CMatrix::zeros(dk, dk);
    for (i, &(ki, ti)) in parts.iter().enumerate() {
        for (j, &(kj, tj)) in parts.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += rho.entries[(i, j)];
            }
        }
    }
    if rho.is_hermitian() {
        OperatorMatrix::hermitian(kept, out)
    } else {
        OperatorMatrix::new(kept, out)
    }
}

/// ½‖ρ − σ‖₁.
pub fn trace_distance(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    let diff = &a.entries - &b.entries;
    0.5 * eigh(&diff).values.iter().map(|v| v.abs()).sum::<f64>()
}
