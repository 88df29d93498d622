//! KdV invariant densities `chi_n` and the trace relations
//! `-int chi_{2n+1} dx = 2^{2(n+1)} / (2n+1) sum kappa_j^{2n+1}` that hold
//! with equality for reflectionless potentials.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::field::{sample_field, soliton_centre, Axis, FieldSample, Grid, Partial};
use crate::jet::TaylorJet;
use crate::params::{SolitonParams, SummabilityClass};
use crate::quad::integrate;
use crate::{Error, Result};

pub const MAX_CHI_ORDER: usize = 7;

/// Values of `chi_1..=chi_max` at a point from `[V, V_x, ..., d_x^k V]`,
/// `k >= max_order - 1`.
pub fn chi_values(v_derivs: &[f64], max_order: usize) -> Result<Vec<f64>> {
    Ok(chi_jets(v_derivs, max_order)?.iter().map(TaylorJet::value).collect())
}

/// `chi_1 = V`, `chi_2 = -V_x`, `chi_{n+1} = -d_x chi_n - sum_{m=1}^{n-1} chi_{n-m} chi_m`,
/// carried out on Taylor jets so every derivative is exact.
pub fn chi_jets(v_derivs: &[f64], max_order: usize) -> Result<Vec<TaylorJet>> {
    if max_order == 0 || max_order > MAX_CHI_ORDER {
        return Err(Error::UnsupportedOrder { t: 0, x: max_order });
    }
    if v_derivs.len() < max_order {
        return Err(Error::InsufficientJet {
            required: max_order - 1,
            available: v_derivs.len().saturating_sub(1),
        });
    }
    let v = TaylorJet::from_derivatives(&v_derivs[..max_order]);
    let mut chi: Vec<TaylorJet> = Vec::with_capacity(max_order);
    chi.push(v);
    for n in 1..max_order {
        // chi[n] is chi_{n+1}
        let mut next = -&chi[n - 1].derivative();
        for m in 1..n {
            next = &next - &(&chi[n - m - 1] * &chi[m - 1]);
        }
        chi.push(next);
    }
    Ok(chi)
}

/// `chi_n(t, .)` on an x-axis with its integral over that axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDensity {
    pub order: usize,
    pub t: f64,
    pub values: Vec<f64>,
    pub integral: f64,
    /// Bound on the part of the integral outside the axis.
    pub tail: f64,
}

/// Densities `chi_1..=chi_max` at time index `ti` of a sample carrying
/// `V, ..., d_x^{max_order - 1} V`. `kappa_min` sets the exponential decay
/// rate used for the tail estimate `|chi(edge)| / (2 kappa_min)`.
pub fn chi_ladder(sample: &FieldSample, ti: usize, max_order: usize, kappa_min: f64) -> Result<Vec<InvariantDensity>> {
    let nx = sample.grid.x.len();
    let t = *sample
        .grid
        .t
        .get(ti)
        .ok_or(Error::InvalidGrid("time index out of range"))?;
    let available = sample.x_order();
    if max_order == 0 || available + 1 < max_order {
        return Err(Error::InsufficientJet {
            required: max_order.saturating_sub(1),
            available,
        });
    }
    let mut columns = alloc::vec![Vec::with_capacity(nx); max_order];
    for xi in 0..nx {
        let derivs = sample
            .x_derivatives(ti, xi, max_order - 1)
            .ok_or(Error::InsufficientJet {
                required: max_order - 1,
                available,
            })?;
        for (col, v) in columns.iter_mut().zip(chi_values(&derivs, max_order)?) {
            col.push(v);
        }
    }
    columns
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            let integral = integrate(&sample.grid.x, &values)?;
            let tail = if kappa_min > 0.0 {
                (values[0].abs() + values[nx - 1].abs()) / (2.0 * kappa_min)
            } else {
                0.0
            };
            Ok(InvariantDensity {
                order: i + 1,
                t,
                values,
                integral,
                tail,
            })
        })
        .collect()
}

/// Sinh-mapped axis covering every soliton of the first `n` with a margin of
/// `margin / kappa_j` around its centre, at parameter spacing `du`.
pub fn integration_axis(params: &SolitonParams, n: usize, t: f64, margin: f64, du: f64) -> Result<Axis> {
    if !(du > 0.0 && margin > 0.0) {
        return Err(Error::InvalidGrid("integration axis needs positive spacing and margin"));
    }
    if n == 0 {
        return Axis::uniform(-1.0, 1.0, 3);
    }
    let k = &params.kappas()[..n];
    let c = &params.norming()[..n];
    let lo = (0..n)
        .map(|j| soliton_centre(k[j], c[j], t) - margin / k[j])
        .fold(f64::INFINITY, f64::min);
    let hi = (0..n)
        .map(|j| soliton_centre(k[j], c[j], t) + margin / k[j])
        .fold(f64::NEG_INFINITY, f64::max);
    Axis::around_solitons(params, n, t, lo, hi, du)
}

/// Samples `V, ..., d_x^{max_order-1} V` on [`integration_axis`] and returns the ladder.
pub fn sample_invariants(
    params: &SolitonParams,
    n: usize,
    t: f64,
    max_order: usize,
    du: f64,
) -> Result<Vec<InvariantDensity>> {
    let axis = integration_axis(params, n, t, DEFAULT_MARGIN, du)?;
    let partials: Vec<Partial> = (0..max_order).map(Partial::x).collect();
    let sample = sample_field(params, n, &Grid::new(alloc::vec![t], axis)?, &partials)?;
    chi_ladder(&sample, 0, max_order, kappa_min(params, n))
}

pub const DEFAULT_MARGIN: f64 = 14.0;

pub fn kappa_min(params: &SolitonParams, n: usize) -> f64 {
    params.kappas()[..n]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .min(f64::MAX)
}

/// `2^{2(n+1)} / (2n+1) sum kappa_j^{2n+1}`.
pub fn trace_rhs(kappas: &[f64], n: usize) -> f64 {
    let p = 2 * n + 1;
    let s: f64 = kappas.iter().map(|&k| libm::pow(k, p as f64)).sum();
    libm::pow(2.0, (2 * (n + 1)) as f64) / p as f64 * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRelation {
    pub order: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / |rhs|`, or the absolute gap when `rhs = 0`.
    pub defect: f64,
    /// Relative size of the integration tail estimate.
    pub tail_budget: f64,
}

fn check_class(params: &SolitonParams) -> Result<()> {
    match params.class() {
        Some(SummabilityClass::LinfSummable) => Err(Error::ClassMismatch("trace relations need summable kappas")),
        _ => Ok(()),
    }
}

/// Compares `-int chi_{2n+1}` with the eigenvalue sum of the first `n_used` solitons.
pub fn trace_relation(params: &SolitonParams, n_used: usize, density: &InvariantDensity) -> Result<TraceRelation> {
    if density.order.is_multiple_of(2) {
        return Err(Error::EvenOrder(density.order));
    }
    check_class(params)?;
    let n = (density.order - 1) / 2;
    let lhs = -density.integral;
    let rhs = trace_rhs(&params.kappas()[..n_used], n);
    let scale = if rhs == 0.0 { 1.0 } else { rhs.abs() };
    Ok(TraceRelation {
        order: density.order,
        t: density.t,
        lhs,
        rhs,
        defect: (lhs - rhs).abs() / scale,
        tail_budget: density.tail / scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// `-int chi_{4m+1} <= rhs`.
    Upper,
    /// `-int chi_{4m+3} >= rhs`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub order: usize,
    pub kind: BoundKind,
    pub lhs: f64,
    pub rhs: f64,
    /// The inequality holds within `tol` relative plus the tail budget.
    pub holds: bool,
    /// Equality within the same allowance.
    pub saturated: bool,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn all_saturated(&self) -> bool {
        self.entries.iter().all(|e| e.saturated)
    }
}

/// The one-sided bounds on odd densities, which reflectionless fields saturate.
pub fn bound_check(
    params: &SolitonParams,
    n_used: usize,
    densities: &[InvariantDensity],
    tol: f64,
) -> Result<BoundReport> {
    let mut entries = Vec::new();
    for d in densities.iter().filter(|d| d.order % 2 == 1) {
        let kind = if d.order % 4 == 1 {
            BoundKind::Upper
        } else {
            BoundKind::Lower
        };
        let r = trace_relation(params, n_used, d)?;
        let slack = tol * r.rhs.abs() + d.tail;
        let holds = match kind {
            BoundKind::Upper => r.lhs <= r.rhs + slack,
            BoundKind::Lower => r.lhs >= r.rhs - slack,
        };
        entries.push(BoundEntry {
            order: d.order,
            kind,
            lhs: r.lhs,
            rhs: r.rhs,
            holds,
            saturated: (r.lhs - r.rhs).abs() <= slack,
            defect: r.defect,
        });
    }
    Ok(BoundReport { entries })
}
