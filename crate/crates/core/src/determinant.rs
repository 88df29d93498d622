//! The matrix `C_N(t, x)`, the log-determinant `log det(1 + C)` and its exact
//! `(t, x)`-derivatives.
//!
//! Entries are `C_jl = g_j g_l / (kappa_j + kappa_l)` with
//! `g_j = c_j exp(4 kappa_j^3 t - kappa_j x)`. Writing `l_j = log g_j`, the
//! factorization never forms `g_j` for `l_j > 0`: with `f_j = g_j` on those
//! "passed" indices and `f_j = 1` otherwise,
//!
//! ```text
//! 1 + C = F H F,   H = F^{-2} + (G / F) K (G / F),   K_jl = 1 / (kappa_j + kappa_l)
//! ```
//!
//! so every entry of `H` is bounded by `K`, and
//! `log det(1 + C) = 2 sum_{passed} l_j + log det H`.
//!
//! Shifting the evaluation point by `(tau, eps)` multiplies each term of `H`
//! by an exponential `exp(a tau + b eps)`, so the Taylor coefficients of `H`
//! are Hadamard-weighted copies of its two parts. The derivatives of
//! `log det` then follow from the resolvent recursion
//! `d log det H = tr(H^{-1} dH)`, `d H^{-1} = -H^{-1} (dH) H^{-1}`, carried
//! out on Taylor coefficients. No finite differences are involved.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Cholesky, Matrix};
use crate::params::SolitonParams;
use crate::{Error, Result};

pub use crate::linalg::Matrix as DenseMatrix;

/// Largest supported t- and x-derivative orders of `log det(1 + C)`.
pub const MAX_T_ORDER: usize = 3;
pub const MAX_X_ORDER: usize = 12;

/// A downward-closed set of multi-indices `(m, n)`: for each t-order `m`, all
/// x-orders `0..=max_x[m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetShape {
    max_x: Vec<usize>,
    offsets: Vec<usize>,
}

impl JetShape {
    pub fn rectangle(max_t: usize, max_x: usize) -> Result<Self> {
        Self::from_columns(vec![max_x; max_t + 1])
    }

    /// Smallest shape containing every requested `(t_order, x_order)`.
    pub fn covering(partials: &[(usize, usize)]) -> Result<Self> {
        let max_t = partials.iter().map(|p| p.0).max().unwrap_or(0);
        let mut cols = vec![0usize; max_t + 1];
        for &(m, n) in partials {
            for c in cols.iter_mut().take(m + 1) {
                *c = (*c).max(n);
            }
        }
        Self::from_columns(cols)
    }

    fn from_columns(max_x: Vec<usize>) -> Result<Self> {
        let max_t = max_x.len() - 1;
        let top = max_x.iter().copied().max().unwrap_or(0);
        if max_t > MAX_T_ORDER || top > MAX_X_ORDER {
            return Err(Error::UnsupportedOrder { t: max_t, x: top });
        }
        let mut offsets = Vec::with_capacity(max_x.len());
        let mut acc = 0;
        for &c in &max_x {
            offsets.push(acc);
            acc += c + 1;
        }
        Ok(Self { max_x, offsets })
    }

    pub fn max_t(&self) -> usize {
        self.max_x.len() - 1
    }

    pub fn max_x(&self, m: usize) -> Option<usize> {
        self.max_x.get(m).copied()
    }

    pub fn len(&self) -> usize {
        self.offsets
            .last()
            .map_or(0, |o| o + self.max_x[self.max_x.len() - 1] + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: usize, n: usize) -> bool {
        self.max_x(m).is_some_and(|c| n <= c)
    }

    pub fn index(&self, m: usize, n: usize) -> Option<usize> {
        self.contains(m, n).then(|| self.offsets[m] + n)
    }

    /// Multi-indices in lexicographic order, so every index follows all
    /// indices it dominates.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.max_x
            .iter()
            .enumerate()
            .flat_map(|(m, &c)| (0..=c).map(move |n| (m, n)))
    }
}

/// `log det(1 + C)` and its partials `d_t^m d_x^n` over a [`JetShape`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogDetJet {
    shape: JetShape,
    /// Taylor coefficients, i.e. partials divided by `m! n!`.
    coeffs: Vec<f64>,
}

impl LogDetJet {
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn shape(&self) -> &JetShape {
        &self.shape
    }

    /// `d_t^m d_x^n log det(1 + C)`, if inside the computed shape.
    pub fn partial(&self, m: usize, n: usize) -> Option<f64> {
        self.shape
            .index(m, n)
            .map(|i| self.coeffs[i] * factorial(m) * factorial(n))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn powi(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

/// `C_N(t, x)` in factored form. Immutable once built.
#[derive(Debug, Clone)]
pub struct CauchyMatrix {
    t: f64,
    x: f64,
    kappas: Vec<f64>,
    norming: Vec<f64>,
    /// `l_j = log c_j + 4 kappa_j^3 t - kappa_j x`.
    log_weights: Vec<f64>,
    passed: Vec<bool>,
    /// The `(G/F) K (G/F)` part of `H`.
    dense: Matrix,
    /// `exp(-2 l_j)` on passed indices, 1 elsewhere.
    diag: Vec<f64>,
    chol: Cholesky,
}

/// Builds `C_N(t, x)` from the first `n` parameters and factors `1 + C`.
pub fn build(params: &SolitonParams, n: usize, t: f64, x: f64) -> Result<CauchyMatrix> {
    params.check_order(n)?;
    let kappas = params.kappas()[..n].to_vec();
    let norming = params.norming()[..n].to_vec();
    if !(t.is_finite() && x.is_finite()) {
        return Err(Error::WindowExceeded { t, x });
    }
    let log_weights: Vec<f64> = kappas
        .iter()
        .zip(&norming)
        .map(|(&k, &c)| libm::log(c) + 4.0 * k * k * k * t - k * x)
        .collect();
    if log_weights.iter().any(|l| !l.is_finite()) {
        return Err(Error::WindowExceeded { t, x });
    }
    let passed: Vec<bool> = log_weights.iter().map(|&l| l > 0.0).collect();
    let h: Vec<f64> = log_weights
        .iter()
        .zip(&passed)
        .map(|(&l, &p)| if p { 1.0 } else { libm::exp(l) })
        .collect();
    let dense = Matrix::from_fn(n, |j, l| h[j] * h[l] / (kappas[j] + kappas[l]));
    let diag: Vec<f64> = log_weights
        .iter()
        .zip(&passed)
        .map(|(&l, &p)| if p { libm::exp(-2.0 * l) } else { 1.0 })
        .collect();
    let mut scaled = dense.clone();
    for (j, d) in diag.iter().enumerate() {
        scaled[(j, j)] += d;
    }
    let chol = Cholesky::factor(&scaled).map_err(|pivot| Error::CholeskyBreakdown { pivot })?;
    Ok(CauchyMatrix {
        t,
        x,
        kappas,
        norming,
        log_weights,
        passed,
        dense,
        diag,
        chol,
    })
}

impl CauchyMatrix {
    pub fn order(&self) -> usize {
        self.kappas.len()
    }

    pub fn point(&self) -> (f64, f64) {
        (self.t, self.x)
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn norming(&self) -> &[f64] {
        &self.norming
    }

    /// `log g_j`, where `g_j = c_j exp(4 kappa_j^3 t - kappa_j x)` is the
    /// j-th component of the undressed vector `Psi^0(t, x)`.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `C_jl`, which overflows to infinity far to the left of the solitons.
    pub fn entry(&self, j: usize, l: usize) -> f64 {
        libm::exp(self.log_weights[j] + self.log_weights[l]) / (self.kappas[j] + self.kappas[l])
    }

    pub fn entries(&self) -> Matrix {
        Matrix::from_fn(self.order(), |j, l| self.entry(j, l))
    }

    /// `log det(1 + C) >= 0`.
    pub fn logdet(&self) -> f64 {
        let shift: f64 = self
            .log_weights
            .iter()
            .zip(&self.passed)
            .filter(|(_, &p)| p)
            .map(|(l, _)| 2.0 * l)
            .sum();
        (shift + self.chol.log_det()).max(0.0)
    }

    /// `(C_x, C_t) = (-(D C + C D), 4 (D^3 C + C D^3))` with `D = diag(kappa)`.
    pub fn derivative_tensors(&self) -> (Matrix, Matrix) {
        let c = self.entries();
        let k = &self.kappas;
        let cx = Matrix::from_fn(self.order(), |j, l| -(k[j] + k[l]) * c[(j, l)]);
        let ct = Matrix::from_fn(self.order(), |j, l| {
            4.0 * (k[j] * k[j] * k[j] + k[l] * k[l] * k[l]) * c[(j, l)]
        });
        (cx, ct)
    }

    /// Exponential rates `(a_j, b_j)` of the weight carried by row `j` of the
    /// dense part: `(4 kappa^3, -kappa)` where unfactored, zero where passed.
    fn dense_rates(&self) -> Vec<(f64, f64)> {
        self.kappas
            .iter()
            .zip(&self.passed)
            .map(|(&k, &p)| if p { (0.0, 0.0) } else { (4.0 * k * k * k, -k) })
            .collect()
    }

    /// Taylor coefficients of `H(t + tau, x + eps)` over `shape`.
    fn scaled_series(&self, shape: &JetShape) -> Vec<Matrix> {
        let n = self.order();
        let rates = self.dense_rates();
        shape
            .iter()
            .map(|(m, q)| {
                if (m, q) == (0, 0) {
                    let mut h = self.dense.clone();
                    for (j, d) in self.diag.iter().enumerate() {
                        h[(j, j)] += d;
                    }
                    return h;
                }
                let norm = factorial(m) * factorial(q);
                let mut h = Matrix::from_fn(n, |j, l| {
                    let (a, b) = (rates[j].0 + rates[l].0, rates[j].1 + rates[l].1);
                    self.dense[(j, l)] * powi(a, m) * powi(b, q) / norm
                });
                for j in 0..n {
                    if self.passed[j] {
                        let k = self.kappas[j];
                        h[(j, j)] += self.diag[j] * powi(-8.0 * k * k * k, m) * powi(2.0 * k, q) / norm;
                    }
                }
                h
            })
            .collect()
    }

    /// Partials of `log det(1 + C)` over an explicit shape.
    pub fn logdet_partials(&self, shape: &JetShape) -> LogDetJet {
        let n = self.order();
        let len = shape.len();
        let mut coeffs = vec![0.0; len];
        coeffs[0] = self.logdet();
        if n == 0 {
            return LogDetJet {
                shape: shape.clone(),
                coeffs,
            };
        }
        let series = self.scaled_series(shape);
        let inv = self.chol.inverse();
        let needed = |m: usize, q: usize| shape.contains(m, q + 1) || shape.contains(m + 1, q);
        let mut resolvent: Vec<Option<Matrix>> = vec![None; len];
        resolvent[0] = Some(inv);

        let indices: Vec<(usize, usize)> = shape.iter().collect();
        for (pos, &(m, q)) in indices.iter().enumerate().skip(1) {
            // log det H coefficient from the lower resolvent coefficients,
            // weighting by the x-degree (or t-degree on the t-axis).
            let mut acc = 0.0;
            for (ipos, &(a, b)) in indices.iter().enumerate().skip(1) {
                if a > m || b > q {
                    continue;
                }
                let w = if q > 0 { b } else { a };
                if w == 0 {
                    continue;
                }
                let zpos = shape.index(m - a, q - b).unwrap_or(0);
                if let Some(z) = &resolvent[zpos] {
                    acc += w as f64 * z.trace_product_sym(&series[ipos]);
                }
            }
            coeffs[pos] = acc / if q > 0 { q as f64 } else { m as f64 };

            if needed(m, q) {
                let mut s = Matrix::zeros(n);
                for (ipos, &(a, b)) in indices.iter().enumerate().skip(1) {
                    if a > m || b > q {
                        continue;
                    }
                    let zpos = shape.index(m - a, q - b).unwrap_or(0);
                    if let Some(z) = &resolvent[zpos] {
                        s.add_product(&series[ipos], z);
                    }
                }
                let mut z = resolvent[0].as_ref().map(|b0| b0.mul(&s)).unwrap_or(s);
                z.scale(-1.0);
                resolvent[pos] = Some(z);
            }
        }

        // Exact contribution of the factored-out weights.
        for (j, &k) in self.kappas.iter().enumerate() {
            if self.passed[j] {
                if let Some(i) = shape.index(1, 0) {
                    coeffs[i] += 8.0 * k * k * k;
                }
                if let Some(i) = shape.index(0, 1) {
                    coeffs[i] -= 2.0 * k;
                }
            }
        }
        LogDetJet {
            shape: shape.clone(),
            coeffs,
        }
    }

    /// Partials `d_t^m d_x^n log det(1 + C)` for `m <= max_t`, `n <= max_x`.
    pub fn logdet_jet(&self, max_t: usize, max_x: usize) -> Result<LogDetJet> {
        Ok(self.logdet_partials(&JetShape::rectangle(max_t, max_x)?))
    }

    /// Taylor coefficients in `(tau, eps)` of `Psi = (1 + C)^{-1} Psi^0`,
    /// where `Psi^0_j = g_j`, one vector per multi-index of `shape`.
    pub(crate) fn solution_series(&self, shape: &JetShape) -> Vec<Vec<f64>> {
        let n = self.order();
        let series = self.scaled_series(shape);
        let indices: Vec<(usize, usize)> = shape.iter().collect();
        let rhs_coeff = |j: usize, m: usize, q: usize| -> f64 {
            if self.passed[j] {
                if (m, q) == (0, 0) {
                    1.0
                } else {
                    0.0
                }
            } else {
                let k = self.kappas[j];
                libm::exp(self.log_weights[j]) * powi(4.0 * k * k * k, m) * powi(-k, q) / (factorial(m) * factorial(q))
            }
        };
        // H y = h, with y = F Psi.
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(indices.len());
        for &(m, q) in &indices {
            let mut rhs: Vec<f64> = (0..n).map(|j| rhs_coeff(j, m, q)).collect();
            for (ipos, &(a, b)) in indices.iter().enumerate().skip(1) {
                if a > m || b > q {
                    continue;
                }
                if let Some(ypos) = shape.index(m - a, q - b) {
                    let prod = series[ipos].mul_vec(&ys[ypos]);
                    rhs.iter_mut().zip(prod).for_each(|(r, p)| *r -= p);
                }
            }
            ys.push(self.chol.solve(&rhs));
        }
        // Psi = F^{-1} y, where F^{-1}_j = exp(-l_j + kappa eps - 4 kappa^3 tau)
        // on passed indices.
        indices
            .iter()
            .map(|&(m, q)| {
                (0..n)
                    .map(|j| {
                        if !self.passed[j] {
                            return ys[shape.index(m, q).unwrap_or(0)][j];
                        }
                        let k = self.kappas[j];
                        let base = libm::exp(-self.log_weights[j]);
                        let mut s = 0.0;
                        for a in 0..=m {
                            for b in 0..=q {
                                if let Some(ypos) = shape.index(m - a, q - b) {
                                    s += ys[ypos][j] * powi(-4.0 * k * k * k, a) * powi(k, b)
                                        / (factorial(a) * factorial(b));
                                }
                            }
                        }
                        s * base
                    })
                    .collect()
            })
            .collect()
    }

    /// Solves `(1 + C) y = rhs` using the scaled factor.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        // (1 + C) = F H F, F = exp(l) on passed indices.
        let f: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&self.passed)
            .map(|(&l, &p)| if p { libm::exp(-l) } else { 1.0 })
            .collect();
        let scaled: Vec<f64> = rhs.iter().zip(&f).map(|(r, fi)| r * fi).collect();
        let y = self.chol.solve(&scaled);
        y.iter().zip(&f).map(|(v, fi)| v * fi).collect()
    }
}

/// One term `a_I exp(-2 sum_{j in I} kappa_j x)` of the determinant expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorTerm {
    /// Zero-based soliton indices in `I`.
    pub subset: Vec<usize>,
    /// `det C_I(0, 0)`.
    pub coefficient: f64,
    /// `2 sum_{j in I} kappa_j`.
    pub rate: f64,
}

pub const MAX_EXPANSION_ORDER: usize = 12;

/// Expansion `det(1 + C(0, x)) = 1 + sum_I a_I exp(-2 sum_I kappa_j x)` over
/// nonempty subsets `I`, with `a_I` the principal minors of `C(0, 0)`.
pub fn principal_minor_expansion(params: &SolitonParams, n: usize) -> Result<Vec<MinorTerm>> {
    if n > MAX_EXPANSION_ORDER {
        return Err(Error::ExpansionTooLarge {
            requested: n,
            max: MAX_EXPANSION_ORDER,
        });
    }
    params.check_order(n)?;
    let k = &params.kappas()[..n];
    let c = &params.norming()[..n];
    let mut terms = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let minor = Matrix::from_fn(subset.len(), |a, b| {
            let (j, l) = (subset[a], subset[b]);
            c[j] * c[l] / (k[j] + k[l])
        });
        let chol = Cholesky::factor(&minor).map_err(|pivot| Error::CholeskyBreakdown { pivot })?;
        terms.push(MinorTerm {
            rate: 2.0 * subset.iter().map(|&j| k[j]).sum::<f64>(),
            coefficient: libm::exp(chol.log_det()),
            subset,
        });
    }
    Ok(terms)
}

/// `det(1 + C(0, x))` summed from the expansion.
pub fn evaluate_expansion(terms: &[MinorTerm], x: f64) -> f64 {
    1.0 + terms
        .iter()
        .map(|t| t.coefficient * libm::exp(-t.rate * x))
        .sum::<f64>()
}
