//! The potential `V_N = -2 d_x^2 log det(1 + C_N)`, the eigenfunctions
//! `Psi = (1 + C)^{-1} Psi^0`, the squared-eigenfunction form
//! `V_N = -4 sum kappa_j psi_j^2`, and the KdV residual, evaluated pointwise
//! or sampled on `(t, x)` grids.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::determinant::{build, CauchyMatrix, JetShape};
use crate::params::{tail_trace_bound, SolitonParams};
use crate::{Error, Result};

/// A partial derivative `d_t^t d_x^x` of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Partial {
    pub t: usize,
    pub x: usize,
}

impl Partial {
    pub const V: Partial = Partial { t: 0, x: 0 };
    pub const VT: Partial = Partial { t: 1, x: 0 };
    pub const VX: Partial = Partial { t: 0, x: 1 };
    pub const VXXX: Partial = Partial { t: 0, x: 3 };

    pub const fn new(t: usize, x: usize) -> Self {
        Self { t, x }
    }

    pub const fn x(order: usize) -> Self {
        Self { t: 0, x: order }
    }
}

/// `V` at one point.
pub fn potential_det(params: &SolitonParams, n: usize, t: f64, x: f64) -> Result<f64> {
    let m = build(params, n, t, x)?;
    let jet = m.logdet_partials(&JetShape::rectangle(0, 2)?);
    Ok(-2.0 * jet.partial(0, 2).unwrap_or(0.0))
}

/// Requested partials of `V` at one point, from a single factorization.
pub fn evaluate_partials(params: &SolitonParams, n: usize, t: f64, x: f64, partials: &[Partial]) -> Result<Vec<f64>> {
    let m = build(params, n, t, x)?;
    partials_from_matrix(&m, partials)
}

fn partials_from_matrix(m: &CauchyMatrix, partials: &[Partial]) -> Result<Vec<f64>> {
    let shifted: Vec<(usize, usize)> = partials.iter().map(|p| (p.t, p.x + 2)).collect();
    let jet = m.logdet_partials(&JetShape::covering(&shifted)?);
    Ok(shifted
        .iter()
        .map(|&(a, b)| -2.0 * jet.partial(a, b).unwrap_or(0.0))
        .collect())
}

/// `V_t - 6 V V_x + V_xxx` from the exact jet; zero up to round-off.
pub fn kdv_residual(params: &SolitonParams, n: usize, t: f64, x: f64) -> Result<f64> {
    let v = evaluate_partials(params, n, t, x, &[Partial::V, Partial::VX, Partial::VXXX, Partial::VT])?;
    Ok(kdv_combination(v[0], v[1], v[2], v[3]))
}

fn kdv_combination(v: f64, vx: f64, vxxx: f64, vt: f64) -> f64 {
    vt - 6.0 * v * vx + vxxx
}

/// Eigenfunctions and their first two x-derivatives at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionColumn {
    pub t: f64,
    pub x: f64,
    pub psi: Vec<f64>,
    pub dpsi_dx: Vec<f64>,
    pub d2psi_dx2: Vec<f64>,
}

/// Solves `(1 + C) Psi = Psi^0` with `Psi^0_j = c_j exp(4 kappa_j^3 t - kappa_j x)`,
/// and differentiates that identity for `Psi_x`, `Psi_xx`.
pub fn eigenfunctions(params: &SolitonParams, n: usize, t: f64, x: f64) -> Result<EigenfunctionColumn> {
    let m = build(params, n, t, x)?;
    Ok(eigenfunctions_from_matrix(&m))
}

pub(crate) fn eigenfunctions_from_matrix(m: &CauchyMatrix) -> EigenfunctionColumn {
    let (t, x) = m.point();
    let shape = JetShape::rectangle(0, 2).expect("static shape");
    let mut series = m.solution_series(&shape).into_iter();
    let psi = series.next().unwrap_or_default();
    let dpsi_dx = series.next().unwrap_or_default();
    let d2psi_dx2 = series.next().unwrap_or_default().into_iter().map(|v| 2.0 * v).collect();
    EigenfunctionColumn {
        t,
        x,
        psi,
        dpsi_dx,
        d2psi_dx2,
    }
}

/// `-4 sum kappa_j psi_j^2`.
pub fn potential_sq(params: &SolitonParams, n: usize, t: f64, x: f64) -> Result<f64> {
    let col = eigenfunctions(params, n, t, x)?;
    Ok(squared_form(&params.kappas()[..n], &col.psi))
}

pub(crate) fn squared_form(kappas: &[f64], psi: &[f64]) -> f64 {
    -4.0 * kappas.iter().zip(psi).map(|(k, p)| k * p * p).sum::<f64>()
}

/// Nodes along x: evenly spaced, or `x = center + scale sinh(u)` for evenly
/// spaced `u`, which resolves features whose width grows with `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    Uniform {
        min: f64,
        max: f64,
        n: usize,
    },
    Sinh {
        center: f64,
        scale: f64,
        u_min: f64,
        u_max: f64,
        n: usize,
    },
}

impl Axis {
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) || n < 2 {
            return Err(Error::InvalidGrid(
                "uniform axis needs min < max and at least two nodes",
            ));
        }
        Ok(Axis::Uniform { min, max, n })
    }

    /// Uniform axis with spacing close to `h`, adjusted to an odd node count.
    pub fn with_spacing(min: f64, max: f64, h: f64) -> Result<Self> {
        let intervals = libm::ceil((max - min) / h) as usize;
        let intervals = intervals.max(2) + intervals % 2;
        Self::uniform(min, max, intervals + 1)
    }

    /// Sinh-mapped axis covering `[x_min, x_max]`.
    pub fn sinh(center: f64, scale: f64, x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(scale > 0.0 && x_min < center && center < x_max) || n < 3 {
            return Err(Error::InvalidGrid(
                "sinh axis needs x_min < center < x_max and a positive scale",
            ));
        }
        Ok(Axis::Sinh {
            center,
            scale,
            u_min: libm::asinh((x_min - center) / scale),
            u_max: libm::asinh((x_max - center) / scale),
            n,
        })
    }

    pub fn len(&self) -> usize {
        match *self {
            Axis::Uniform { n, .. } | Axis::Sinh { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spacing of the underlying uniform parameter.
    pub fn step(&self) -> f64 {
        match *self {
            Axis::Uniform { min, max, n } => (max - min) / (n - 1) as f64,
            Axis::Sinh { u_min, u_max, n, .. } => (u_max - u_min) / (n - 1) as f64,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        match *self {
            Axis::Uniform { min, max, n } => {
                if i + 1 == n {
                    max
                } else {
                    min + i as f64 * self.step()
                }
            }
            Axis::Sinh {
                center, scale, u_min, ..
            } => center + scale * libm::sinh(u_min + i as f64 * self.step()),
        }
    }

    /// `dx/du` at node `i` (the spacing itself for uniform axes is `step`).
    pub fn jacobian(&self, i: usize) -> f64 {
        match *self {
            Axis::Uniform { .. } => 1.0,
            Axis::Sinh { scale, u_min, .. } => scale * libm::cosh(u_min + i as f64 * self.step()),
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.node(0), self.node(self.len() - 1))
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Axis::Uniform { .. })
    }

    /// Sinh-mapped axis over `[lo, hi]`, finest around the narrowest of the
    /// first `n` solitons at time `t`, with parameter spacing close to `du`
    /// and an even number of intervals.
    pub fn around_solitons(params: &SolitonParams, n: usize, t: f64, lo: f64, hi: f64, du: f64) -> Result<Self> {
        if n == 0 || !(du > 0.0) {
            return Err(Error::InvalidGrid("sinh axis needs solitons and a positive spacing"));
        }
        let k = params.kappas();
        let widest = (0..n).fold(0, |a, j| if k[j] > k[a] { j } else { a });
        let scale = 1.0 / k[widest];
        let centre = soliton_centre(k[widest], params.norming()[widest], t);
        let mid = centre.clamp(lo + 0.25 * (hi - lo).min(scale), hi - 0.25 * (hi - lo).min(scale));
        let span = libm::asinh((hi - mid) / scale) - libm::asinh((lo - mid) / scale);
        let intervals = (libm::ceil(span / du) as usize).max(2);
        Axis::sinh(mid, scale, lo, hi, intervals + 1 + intervals % 2)
    }
}

/// Centre `(log(c^2 / 2 kappa) + 8 kappa^3 t) / (2 kappa)` of an isolated soliton.
pub fn soliton_centre(kappa: f64, c: f64, t: f64) -> f64 {
    (libm::log(c * c / (2.0 * kappa)) + 8.0 * kappa * kappa * kappa * t) / (2.0 * kappa)
}

/// Rectangular `(t, x)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t: Vec<f64>,
    pub x: Axis,
}

impl Grid {
    pub fn new(t: Vec<f64>, x: Axis) -> Result<Self> {
        if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("time list must be nonempty and finite"));
        }
        Ok(Self { t, x })
    }

    pub fn uniform(t: Vec<f64>, x_min: f64, x_max: f64, nx: usize) -> Result<Self> {
        Self::new(t, Axis::uniform(x_min, x_max, nx)?)
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(t, x)` pairs in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t
            .iter()
            .flat_map(move |&t| (0..self.x.len()).map(move |i| (t, self.x.node(i))))
    }

    fn worst_corner(&self) -> (f64, f64) {
        let t_max = self.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (t_max, self.x.bounds().0)
    }
}

/// `V` and selected partials on a grid, with the truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub grid: Grid,
    pub n_used: usize,
    /// Trace-norm bound on the omitted part of `C` at the worst grid corner.
    pub eps_tail: f64,
    pub partials: Vec<Partial>,
    /// One row-major `(t, x)` array per entry of `partials`.
    pub values: Vec<Vec<f64>>,
}

impl FieldSample {
    /// Assembles a sample from per-node partial values in grid order.
    pub fn from_nodes(
        params: &SolitonParams,
        n: usize,
        grid: Grid,
        partials: Vec<Partial>,
        nodes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (t, x) = grid.worst_corner();
        let eps_tail = tail_trace_bound(params, n + 1, t, x)?;
        let mut values = vec![Vec::with_capacity(nodes.len()); partials.len()];
        for node in nodes {
            for (col, v) in values.iter_mut().zip(node) {
                col.push(v);
            }
        }
        Ok(Self {
            grid,
            n_used: n,
            eps_tail,
            partials,
            values,
        })
    }

    pub fn column(&self, p: Partial) -> Option<&[f64]> {
        self.partials
            .iter()
            .position(|&q| q == p)
            .map(|i| self.values[i].as_slice())
    }

    pub fn potential(&self) -> &[f64] {
        self.column(Partial::V).unwrap_or(&[])
    }

    pub fn value(&self, p: Partial, ti: usize, xi: usize) -> Option<f64> {
        self.column(p).map(|c| c[ti * self.grid.x.len() + xi])
    }

    /// Residual column, if `V_t`, `V_x` and `V_xxx` were sampled.
    pub fn kdv_residuals(&self) -> Option<Vec<f64>> {
        let (v, vx, vxxx, vt) = (
            self.column(Partial::V)?,
            self.column(Partial::VX)?,
            self.column(Partial::VXXX)?,
            self.column(Partial::VT)?,
        );
        Some(
            (0..v.len())
                .map(|i| kdv_combination(v[i], vx[i], vxxx[i], vt[i]))
                .collect(),
        )
    }

    /// Highest `k` such that `V, V_x, ..., d_x^k V` are all present.
    pub fn x_order(&self) -> usize {
        (0..)
            .take_while(|&k| self.column(Partial::x(k)).is_some())
            .last()
            .unwrap_or(0)
    }

    /// `[V, V_x, ..., d_x^order V]` at one node.
    pub fn x_derivatives(&self, ti: usize, xi: usize, order: usize) -> Option<Vec<f64>> {
        (0..=order).map(|k| self.value(Partial::x(k), ti, xi)).collect()
    }

    /// The potential at time index `ti` on any axis.
    pub fn profile(&self, ti: usize) -> Result<Profile> {
        let nx = self.grid.x.len();
        let t = *self
            .grid
            .t
            .get(ti)
            .ok_or(Error::InvalidGrid("time index out of range"))?;
        Ok(Profile {
            t,
            x: self.grid.x.nodes(),
            values: self.potential()[ti * nx..(ti + 1) * nx].to_vec(),
        })
    }

    /// The potential at time index `ti` on a uniform axis.
    pub fn slice(&self, ti: usize) -> Result<PotentialSlice> {
        let Axis::Uniform { min, .. } = self.grid.x else {
            return Err(Error::InvalidGrid("slices need a uniform x-axis"));
        };
        let nx = self.grid.x.len();
        let t = *self
            .grid
            .t
            .get(ti)
            .ok_or(Error::InvalidGrid("time index out of range"))?;
        Ok(PotentialSlice {
            t,
            x0: min,
            h: self.grid.x.step(),
            values: self.potential()[ti * nx..(ti + 1) * nx].to_vec(),
        })
    }
}

/// `V(t, .)` on evenly spaced nodes `x0 + i h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSlice {
    pub t: f64,
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl PotentialSlice {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn width(&self) -> f64 {
        self.h * (self.len().max(1) - 1) as f64
    }
}

/// `V(t, .)` on increasing, not necessarily even, nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub t: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn width(&self) -> f64 {
        match (self.x.first(), self.x.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

impl From<&PotentialSlice> for Profile {
    fn from(s: &PotentialSlice) -> Self {
        Self {
            t: s.t,
            x: (0..s.len()).map(|i| s.x(i)).collect(),
            values: s.values.clone(),
        }
    }
}

/// Evaluates the requested partials (plus `V`) at every node, in order.
pub fn sample_field(params: &SolitonParams, n: usize, grid: &Grid, partials: &[Partial]) -> Result<FieldSample> {
    let partials = with_potential(partials);
    let nodes = grid
        .points()
        .map(|(t, x)| evaluate_partials(params, n, t, x, &partials))
        .collect::<Result<Vec<_>>>()?;
    FieldSample::from_nodes(params, n, grid.clone(), partials, nodes)
}

/// `partials` with `V` first and duplicates removed.
pub fn with_potential(partials: &[Partial]) -> Vec<Partial> {
    let mut out = vec![Partial::V];
    for &p in partials {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}
