//! Truncated Taylor series in one variable, `f(x + e) = sum a_k e^k` for
//! `k <= order`. Products and derivatives of jets give exact derivatives of
//! polynomial expressions in `f, f', f'', ...` at a point.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet {
    coeffs: Vec<f64>,
}

impl TaylorJet {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: alloc::vec![0.0; order + 1],
        }
    }

    /// From `[f, f', f'', ...]`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn value(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative_at(&self, k: usize) -> Option<f64> {
        let c = *self.coeffs.get(k)?;
        Some(c * (1..=k).map(|i| i as f64).product::<f64>())
    }

    /// The jet of `f'`, one order shorter.
    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        Self {
            coeffs: (0..n).map(|k| f(self.coeffs[k], other.coeffs[k])).collect(),
        }
    }
}

impl Add for &TaylorJet {
    type Output = TaylorJet;

    fn add(self, rhs: &TaylorJet) -> TaylorJet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TaylorJet {
    type Output = TaylorJet;

    fn sub(self, rhs: &TaylorJet) -> TaylorJet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TaylorJet {
    type Output = TaylorJet;

    fn neg(self) -> TaylorJet {
        TaylorJet {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Cauchy product, truncated to the shorter operand.
impl Mul for &TaylorJet {
    type Output = TaylorJet;

    fn mul(self, rhs: &TaylorJet) -> TaylorJet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        TaylorJet {
            coeffs: (0..n)
                .map(|k| (0..=k).map(|i| self.coeffs[i] * rhs.coeffs[k - i]).sum())
                .collect(),
        }
    }
}
