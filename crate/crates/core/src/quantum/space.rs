use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Ordered tensor factors; the first factor is the most significant index.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HilbertSpace {
    factors: Vec<(String, usize)>,
}

impl HilbertSpace {
    pub fn new<S: ToString>(factors: &[(S, usize)]) -> Result<Self> {
        Self::with_cap(factors, DEFAULT_DIM_CAP)
    }

    pub fn with_cap<S: ToString>(factors: &[(S, usize)], cap: usize) -> Result<Self> {
        let factors: Vec<(String, usize)> = factors.iter().map(|(l, d)| (l.to_string(), *d)).collect();
        if factors.is_empty() || factors.iter().any(|(_, d)| *d == 0) {
            return Err(Error::invalid("every factor needs a positive dimension"));
        }
        for (i, (l, _)) in factors.iter().enumerate() {
            if factors[..i].iter().any(|(m, _)| m == l) {
                return Err(Error::invalid("factor labels must be unique"));
            }
        }
        let dim = factors.iter().try_fold(1usize, |acc, (_, d)| acc.checked_mul(*d)).unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors.iter().position(|(l, _)| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Sub-space made of the listed factors, in this space's order.
    pub fn restrict(&self, keep: &[&str]) -> Result<HilbertSpace> {
        let mut idx: Vec<usize> = keep.iter().map(|l| self.position(l)).collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        let factors: Vec<(String, usize)> = idx.iter().map(|&i| self.factors[i].clone()).collect();
        Ok(HilbertSpace { factors })
    }
}
