//! Small dense kernels: square row-major matrices and a Cholesky factor.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += a * b`.
    pub fn add_product(&mut self, a: &Matrix, b: &Matrix) {
        let n = self.n;
        debug_assert!(a.n == n && b.n == n);
        for i in 0..n {
            let out = &mut self.data[i * n..(i + 1) * n];
            for k in 0..n {
                let aik = a.data[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &b.data[k * n..(k + 1) * n];
                for (o, &bkj) in out.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n);
        out.add_product(self, other);
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `tr(self * other)` for symmetric `other`, i.e. the Frobenius product.
    pub fn trace_product_sym(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular factor `L` with `A = L L^T`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric matrix. Returns the failing pivot if the matrix is
    /// not numerically positive definite.
    pub fn factor(a: &Matrix) -> Result<Self, usize> {
        let n = a.dim();
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let djj = libm::sqrt(d);
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l.data[ri + k] * l.data[rj + k];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn diag(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.l.dim()).map(move |i| self.l[(i, i)])
    }

    /// `log det A = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.diag().map(libm::log).sum::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.dim();
        // L^{-1} by forward substitution, then A^{-1} = L^{-T} L^{-1}.
        let mut linv = Matrix::zeros(n);
        for j in 0..n {
            linv[(j, j)] = 1.0 / self.l[(j, j)];
            for i in (j + 1)..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.l[(i, k)] * linv[(k, j)];
                }
                linv[(i, j)] = -s / self.l[(i, i)];
            }
        }
        let mut inv = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let start = i.max(j);
                let s: f64 = (start..n).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }
        inv
    }
}
