//! Studies across a ladder of truncations `N_1 <= N_2 <= ...`: differences
//! of `V` and its derivatives between consecutive members on a compact grid,
//! and stability of the computed eigenvalues.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::field::{sample_field, FieldSample, Grid, Partial};
use crate::params::{tail_trace_bound, SolitonParams, SummabilityClass};
use crate::spectral::{spectrum, SpectrumOptions, SpectrumReport};
use crate::{Error, Result};

pub const DEFAULT_LADDER: [usize; 5] = [4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDiff {
    pub partial: Partial,
    /// `max |d(V_{N'} - V_N)|` over the grid.
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormDiff {
    pub norm: Norm,
    /// Largest over the grid times of the discrete norm in x of `V_{N'} - V_N`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiff {
    pub n_from: usize,
    pub n_to: usize,
    pub sup: Vec<OrderDiff>,
    pub norms: Vec<NormDiff>,
    /// Tail bound past `n_from` at the worst grid corner.
    pub tail_bound: f64,
    /// `sup |V_{N'} - V_N| / tail_bound`.
    pub ratio: f64,
}

impl PairDiff {
    pub fn sup_of(&self, p: Partial) -> Option<f64> {
        self.sup.iter().find(|d| d.partial == p).map(|d| d.sup)
    }

    pub fn norm_of(&self, n: Norm) -> Option<f64> {
        self.norms.iter().find(|d| d.norm == n).map(|d| d.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub ladder: Vec<usize>,
    pub orders: Vec<Partial>,
    pub pairs: Vec<PairDiff>,
    /// `tail_trace_bound` past each ladder member.
    pub tail_bounds: Vec<f64>,
    /// Largest observed `ratio`; every pair satisfies `sup <= constant * tail_bound`.
    pub empirical_constant: f64,
    /// Per order: whether the sup differences strictly decrease along the ladder.
    pub sup_decreasing: Vec<(Partial, bool)>,
    /// Per norm: whether the differences strictly decrease.
    pub norms_decreasing: Vec<(Norm, bool)>,
    /// `L1 <= width * Linf` held for every pair.
    pub norm_ordering: bool,
}

fn strictly_decreasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// Checks the ladder and the class, and extends infinite families so every
/// member is stored.
pub fn prepare_ladder(params: &SolitonParams, ladder: &[usize], norms: &[Norm]) -> Result<SolitonParams> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidLadder);
    }
    let class = params.class();
    if !norms.is_empty() && !matches!(class, Some(SummabilityClass::Finite | SummabilityClass::L1Summable)) {
        return Err(Error::ClassMismatch("L^p differences need summable kappas"));
    }
    params.extended(*ladder.last().unwrap_or(&0))
}

/// Samples every ladder member on `grid` and compares consecutive members.
pub fn run_study(
    params: &SolitonParams,
    ladder: &[usize],
    grid: &Grid,
    orders: &[Partial],
    norms: &[Norm],
) -> Result<ConvergenceStudy> {
    let params = prepare_ladder(params, ladder, norms)?;
    let samples = ladder
        .iter()
        .map(|&n| sample_field(&params, n, grid, orders))
        .collect::<Result<Vec<_>>>()?;
    assemble_study(&params, ladder, orders, norms, &samples)
}

/// The study from already sampled ladder members (same grid, same partials).
pub fn assemble_study(
    params: &SolitonParams,
    ladder: &[usize],
    orders: &[Partial],
    norms: &[Norm],
    samples: &[FieldSample],
) -> Result<ConvergenceStudy> {
    if samples.len() != ladder.len() || samples.is_empty() {
        return Err(Error::InvalidLadder);
    }
    let grid = &samples[0].grid;
    let (nt, nx) = (grid.t.len(), grid.x.len());
    let (x_min, x_max) = grid.x.bounds();
    let width = x_max - x_min;
    let t_max = grid.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_bounds = ladder
        .iter()
        .map(|&n| tail_trace_bound(params, n + 1, t_max, x_min))
        .collect::<Result<Vec<_>>>()?;

    let column = |s: &FieldSample, p: Partial| -> Result<Vec<f64>> {
        s.column(p).map(<[f64]>::to_vec).ok_or(Error::InsufficientJet {
            required: p.x,
            available: s.x_order(),
        })
    };

    let mut pairs = Vec::with_capacity(ladder.len().saturating_sub(1));
    let mut norm_ordering = true;
    for i in 1..ladder.len() {
        let (a, b) = (&samples[i - 1], &samples[i]);
        let mut sup = Vec::with_capacity(orders.len());
        for &p in orders {
            let (u, v) = (column(a, p)?, column(b, p)?);
            let d = u.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            sup.push(OrderDiff { partial: p, sup: d });
        }
        let (u, v) = (column(a, Partial::V)?, column(b, Partial::V)?);
        let h = grid.x.step() * if grid.x.is_uniform() { 1.0 } else { 0.0 };
        let mut per_t = [0.0f64; 3];
        for ti in 0..nt {
            let diff: Vec<f64> = (0..nx).map(|xi| (u[ti * nx + xi] - v[ti * nx + xi]).abs()).collect();
            let trap = |f: &dyn Fn(f64) -> f64| -> f64 {
                (0..nx)
                    .map(|xi| {
                        let w = if xi == 0 || xi + 1 == nx { 0.5 } else { 1.0 };
                        let hx = if h > 0.0 {
                            h
                        } else {
                            grid.x.step() * grid.x.jacobian(xi)
                        };
                        w * hx * f(diff[xi])
                    })
                    .sum()
            };
            let l1 = trap(&|d| d);
            let l2 = libm::sqrt(trap(&|d| d * d));
            let linf = diff.iter().copied().fold(0.0, f64::max);
            if l1 > width * linf * (1.0 + 1e-12) {
                norm_ordering = false;
            }
            per_t[0] = per_t[0].max(l1);
            per_t[1] = per_t[1].max(l2);
            per_t[2] = per_t[2].max(linf);
        }
        let norm_values = norms
            .iter()
            .map(|&n| NormDiff {
                norm: n,
                value: match n {
                    Norm::L1 => per_t[0],
                    Norm::L2 => per_t[1],
                    Norm::Linf => per_t[2],
                },
            })
            .collect();
        let base = sup.iter().find(|d| d.partial == Partial::V).map_or(per_t[2], |d| d.sup);
        let tail = tail_bounds[i - 1];
        let ratio = if tail > 0.0 {
            base / tail
        } else if base == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        pairs.push(PairDiff {
            n_from: ladder[i - 1],
            n_to: ladder[i],
            sup,
            norms: norm_values,
            tail_bound: tail,
            ratio,
        });
    }
    let empirical_constant = pairs.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let sup_decreasing = orders
        .iter()
        .map(|&o| (o, strictly_decreasing(pairs.iter().filter_map(|p| p.sup_of(o)))))
        .collect();
    let norms_decreasing = norms
        .iter()
        .map(|&n| (n, strictly_decreasing(pairs.iter().filter_map(|p| p.norm_of(n)))))
        .collect();
    Ok(ConvergenceStudy {
        ladder: ladder.to_vec(),
        orders: orders.to_vec(),
        pairs,
        tail_bounds,
        empirical_constant,
        sup_decreasing,
        norms_decreasing,
        norm_ordering,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLadder {
    pub reports: Vec<SpectrumReport>,
    /// Per consecutive pair, the largest shift of the eigenvalues matched
    /// strictly in both members.
    pub leading_shifts: Vec<f64>,
}

/// One spectrum report per ladder member at time `t`.
pub fn spectral_ladder(
    params: &SolitonParams,
    ladder: &[usize],
    t: f64,
    h: f64,
    options: &SpectrumOptions,
) -> Result<SpectralLadder> {
    let params = prepare_ladder(params, ladder, &[])?;
    let reports = ladder
        .iter()
        .map(|&n| spectrum(&params, n, t, h, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(ladder_from_reports(reports))
}

pub fn ladder_from_reports(reports: Vec<SpectrumReport>) -> SpectralLadder {
    let leading_shifts = reports
        .windows(2)
        .map(|w| {
            w[0].strict_matches()
                .filter_map(|a| {
                    let b = w[1].matches.iter().find(|b| b.index == a.index && b.strict)?;
                    Some((a.computed? - b.computed?).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    SpectralLadder {
        reports,
        leading_shifts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{generate, TailRule};
    use core::f64::consts::SQRT_2;

    fn halving(n: usize) -> SolitonParams {
        generate(TailRule::Geometric { ratio: 0.5, base: 0.5 }, n).unwrap()
    }

    const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    #[test]
    fn repeated_member_gives_zero() {
        let p = SolitonParams::explicit(alloc::vec![1.0], alloc::vec![SQRT_2]).unwrap();
        let grid = Grid::uniform(alloc::vec![0.0], -3.0, 3.0, 31).unwrap();
        let s = run_study(&p, &[1, 1], &grid, &[Partial::V], &ALL).unwrap();
        assert_eq!(s.pairs.len(), 1);
        assert_eq!(s.pairs[0].sup[0].sup, 0.0);
        assert!(s.pairs[0].norms.iter().all(|n| n.value == 0.0));
        assert_eq!(s.empirical_constant, 0.0);
    }

    #[test]
    fn ladder_errors() {
        let p = halving(8);
        let grid = Grid::uniform(alloc::vec![0.0], -1.0, 1.0, 5).unwrap();
        assert_eq!(run_study(&p, &[], &grid, &[Partial::V], &[]), Err(Error::InvalidLadder));
        assert_eq!(
            run_study(&p, &[4, 2], &grid, &[Partial::V], &[]),
            Err(Error::InvalidLadder)
        );
        // infinite families grow on demand
        assert!(run_study(&p, &[4, 12], &grid, &[Partial::V], &[]).is_ok());
    }

    #[test]
    fn geometric_study_halves() {
        let p = halving(32);
        let grid = Grid::uniform(alloc::vec![-0.5, 0.0, 0.5], -5.0, 5.0, 41).unwrap();
        let orders = [Partial::V, Partial::VX, Partial::VT];
        let s = run_study(&p, &[4, 8, 16, 32], &grid, &orders, &ALL).unwrap();
        for w in s.pairs.windows(2) {
            let (a, b) = (w[0].sup_of(Partial::V).unwrap(), w[1].sup_of(Partial::V).unwrap());
            assert!(b <= 0.5 * a, "{a} -> {b}");
        }
        assert!(s.sup_decreasing.iter().all(|(_, d)| *d));
        assert!(s.norms_decreasing.iter().all(|(_, d)| *d));
        assert!(s.norm_ordering);
        for p in &s.pairs {
            assert!(p.sup_of(Partial::V).unwrap() <= s.empirical_constant * p.tail_bound);
        }
    }

    #[test]
    fn spectral_ladder_is_nested() {
        let p = halving(16);
        let l = spectral_ladder(&p, &[1, 2, 4], 0.0, 0.01, &SpectrumOptions::default()).unwrap();
        assert_eq!(l.reports.len(), 3);
        assert_eq!(l.reports[0].targets.len(), 1);
        for r in &l.reports {
            assert!(r.max_strict_error() < 1e-4);
        }
        assert!(l.leading_shifts.iter().all(|&s| s < 1e-6));
    }
}
