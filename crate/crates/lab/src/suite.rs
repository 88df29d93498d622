//! The verification suites behind `soliton-lab run`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use soliton_core::field::{potential_sq, Grid, Partial};
use soliton_core::invariants::{bound_check, sample_invariants, trace_relation, BoundReport, TraceRelation};
use soliton_core::limit::{assemble_study, prepare_ladder, ConvergenceStudy, Norm};
use soliton_core::params::SolitonParams;
use soliton_core::spectral::{
    scatter, spectrum, upper_sqrt, weyl_m, ScatteringReport, Side, SpectrumOptions, SpectrumReport,
};
use soliton_core::{Complex64, Error};

use crate::config::{Options, RunConfig};
use crate::format::{csv_table, json, Versioned, SCHEMA_VERSION};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Field,
    Kdv,
    Spectrum,
    Scatter,
    Invariants,
    Converge,
    Mfunction,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Field,
        Suite::Kdv,
        Suite::Spectrum,
        Suite::Scatter,
        Suite::Invariants,
        Suite::Converge,
        Suite::Mfunction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Field => "field",
            Suite::Kdv => "kdv",
            Suite::Spectrum => "spectrum",
            Suite::Scatter => "scatter",
            Suite::Invariants => "invariants",
            Suite::Converge => "converge",
            Suite::Mfunction => "mfunction",
        }
    }

    /// The identity the suite checks, in one line.
    pub fn checks(self) -> &'static str {
        match self {
            Suite::Field => "V = -2 d_x^2 log det(1 + C) = -4 sum_j kappa_j psi_j^2, psi = (1 + C)^{-1} psi^0",
            Suite::Kdv => "V_t - 6 V V_x + V_xxx = 0",
            Suite::Spectrum => "spec(-d_x^2 + V) = {-kappa_j^2} u [0, inf), independent of t",
            Suite::Scatter => "R(k) = 0, T(k) = prod_j (k + i kappa_j) / (k - i kappa_j), |T|^2 + |R|^2 = 1",
            Suite::Invariants => "-int chi_{2n+1} dx = 2^{2(n+1)} / (2n+1) sum_j kappa_j^{2n+1}, n = 0, 1, 2",
            Suite::Converge => "V_N -> V_inf uniformly on compacts and in L^1, L^2 as N grows",
            Suite::Mfunction => "Im m_+(t, z) > 0 > Im m_-(t, z) for Im z > 0; m_+- = +-i sqrt(z) when V = 0",
        }
    }

    /// Longer description printed by `explain`.
    pub fn explain(self) -> &'static str {
        match self {
            Suite::Field => {
                "Samples V on the configured grid from the log-determinant of 1 + C and, independently, \
from the eigenfunction sum -4 sum kappa_j psi_j^2.\n\
Artifacts: field.csv (t, x, V, V_sq).\n\
Tolerance: largest pointwise relative gap |V - V_sq| / max(|V|, |V_sq|). Default 1e-9."
            }
            Suite::Kdv => {
                "Evaluates V_t, V_x and V_xxx exactly from the determinant jet and forms the KdV residual at every grid node.\n\
Artifacts: kdv.csv (t, x, V, V_t, V_x, V_xxx, residual).\n\
Tolerance: max |residual| <= tol * (1 + max |V_xxx|). Default 1e-6."
            }
            Suite::Spectrum => {
                "For each t, discretizes -d_x^2 + V with central differences at spacings h and 2h on a window where the \
matched eigenfunctions have decayed, counts eigenvalues below zero by Sturm sequences and extrapolates in h^2.\n\
Eigenvalues -kappa^2 with kappa^2 > 10 h^2 are matched strictly; smaller ones enter only the accumulation counts.\n\
Artifacts: spectrum.json.\n\
Tolerance: every strict |lambda - (-kappa_j^2)| <= tol (default 1e-4); strict eigenvalues at different t agree \
within twice the larger extrapolation error estimate; accumulation counts shrink with the threshold."
            }
            Suite::Scatter => {
                "For each t, integrates the Jost amplitudes of -u'' + V u = k^2 u from right to left with a fourth order \
Magnus scheme on a sinh-stretched grid, and compares T with the finite product.\n\
Artifacts: scatter.json, scatter.csv (t, k, T, R, product, defects).\n\
Tolerance: |R| <= tol and ||T|^2 + |R|^2 - 1| <= tol, |T - product| <= 10 tol. Default tol 1e-6."
            }
            Suite::Invariants => {
                "For each t, builds chi_1..chi_5 from exact x-derivatives of V, integrates them over a sinh-stretched \
axis, and compares -int chi_{2n+1} with the eigenvalue sums. The one-sided bounds on chi_{4m+1} and chi_{4m+3} \
are checked for saturation.\n\
Artifacts: invariants.json.\n\
Tolerance: relative defect of each relation <= tol, plus the estimated quadrature tail. Default 1e-6."
            }
            Suite::Converge => {
                "Samples V for every truncation order of the ladder on the configured grid and measures consecutive \
differences in sup, L^1 and L^2 norms against the trace-norm tail bound of the omitted solitons.\n\
Artifacts: converge.json, converge.csv (n_from, n_to, sup, L1, L2, tail_bound).\n\
Tolerance: differences strictly decrease along the ladder and the observed constant sup / tail_bound stays \
at or below tol. Default 1."
            }
            Suite::Mfunction => {
                "For each t, evaluates the half-line Weyl m-functions at x = 0 on a square of points in the upper \
half-plane and checks which half-plane they map to, plus conjugate symmetry.\n\
Artifacts: mfunction.csv (t, z, m_plus, m_minus).\n\
Tolerance: the free case matches +-i sqrt(z) within tol. Default 1e-12."
            }
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown suite {0:?}")]
pub struct UnknownSuite(pub String);

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownSuite(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Stopped by a window or overflow guard.
    Guard,
    Error,
}

/// What a suite produced. Files are kept in memory until the run writes them.
#[derive(Debug)]
pub struct Outcome {
    pub suite: Suite,
    pub status: Status,
    pub message: Option<String>,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<(String, Vec<u8>)>,
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub params: &'a SolitonParams,
    pub n: usize,
    pub grid: &'a Grid,
    pub parallel: bool,
}

impl Context<'_> {
    fn options(&self) -> &Options {
        &self.config.options
    }
}

struct Checked {
    passed: bool,
    metrics: BTreeMap<String, f64>,
    files: Vec<(String, Vec<u8>)>,
}

fn is_guard(e: &Error) -> bool {
    matches!(e, Error::WindowExceeded { .. } | Error::GridTooNarrow { .. })
}

pub fn run(suite: Suite, ctx: &Context) -> Outcome {
    let tol = tolerance(suite, ctx.config);
    let result = match suite {
        Suite::Field => field(ctx, tol),
        Suite::Kdv => kdv(ctx, tol),
        Suite::Spectrum => spectrum_suite(ctx, tol),
        Suite::Scatter => scatter_suite(ctx, tol),
        Suite::Invariants => invariants(ctx, tol),
        Suite::Converge => converge(ctx, tol),
        Suite::Mfunction => mfunction(ctx, tol),
    };
    match result {
        Ok(c) => Outcome {
            suite,
            status: if c.passed { Status::Pass } else { Status::Fail },
            message: None,
            tolerance: tol,
            metrics: c.metrics,
            files: c.files,
        },
        Err(e) => Outcome {
            suite,
            status: if is_guard(&e) { Status::Guard } else { Status::Error },
            message: Some(e.to_string()),
            tolerance: tol,
            metrics: BTreeMap::new(),
            files: Vec::new(),
        },
    }
}

fn tolerance(suite: Suite, config: &RunConfig) -> f64 {
    let t = &config.tolerances;
    match suite {
        Suite::Field => t.field,
        Suite::Kdv => t.kdv,
        Suite::Spectrum => t.spectrum,
        Suite::Scatter => t.scatter,
        Suite::Invariants => t.invariants,
        Suite::Converge => t.converge,
        Suite::Mfunction => t.mfunction,
    }
}

fn versioned<T: Serialize>(suite: Suite, body: T) -> Vec<u8> {
    json(&Versioned {
        schema_version: SCHEMA_VERSION,
        suite: suite.name(),
        body,
    })
}

fn metrics<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn field(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let sample = parallel::sample(ctx.params, ctx.n, ctx.grid, &[], ctx.parallel)?;
    let points: Vec<(f64, f64)> = ctx.grid.points().collect();
    let sq = parallel::map_ordered(&points, ctx.parallel, |&(t, x)| potential_sq(ctx.params, ctx.n, t, x));
    let sq = sq.into_iter().collect::<Result<Vec<_>, _>>()?;
    let v = sample.potential();
    let mut worst = 0.0f64;
    for (&a, &b) in v.iter().zip(&sq) {
        let scale = a.abs().max(b.abs());
        let gap = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
        worst = nan_max(worst, gap);
    }
    let rows = points
        .iter()
        .zip(v.iter().zip(&sq))
        .map(|(&(t, x), (&a, &b))| vec![t, x, a, b]);
    Ok(Checked {
        passed: worst <= tol,
        metrics: metrics([
            ("max_relative_gap", worst),
            ("eps_tail", sample.eps_tail),
            ("max_abs_v", v.iter().fold(0.0, |m, x| nan_max(m, x.abs()))),
        ]),
        files: vec![("field.csv".into(), csv_table(&["t", "x", "V", "V_sq"], rows))],
    })
}

fn kdv(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let partials = [Partial::VT, Partial::VX, Partial::VXXX];
    let sample = parallel::sample(ctx.params, ctx.n, ctx.grid, &partials, ctx.parallel)?;
    let residual = sample
        .kdv_residuals()
        .ok_or(Error::InvalidGrid("missing KdV partials"))?;
    let col = |p| sample.column(p).expect("sampled above");
    let (v, vt, vx, vxxx) = (
        sample.potential(),
        col(Partial::VT),
        col(Partial::VX),
        col(Partial::VXXX),
    );
    let max_res = residual.iter().fold(0.0, |m, r| nan_max(m, r.abs()));
    let max_vxxx = vxxx.iter().fold(0.0, |m, r| nan_max(m, r.abs()));
    let rows = ctx
        .grid
        .points()
        .enumerate()
        .map(|(i, (t, x))| vec![t, x, v[i], vt[i], vx[i], vxxx[i], residual[i]]);
    Ok(Checked {
        passed: max_res <= tol * (1.0 + max_vxxx),
        metrics: metrics([
            ("max_residual", max_res),
            ("max_abs_v_xxx", max_vxxx),
            ("eps_tail", sample.eps_tail),
        ]),
        files: vec![(
            "kdv.csv".into(),
            csv_table(&["t", "x", "V", "V_t", "V_x", "V_xxx", "residual"], rows),
        )],
    })
}

#[derive(Serialize)]
struct IsospectralPair {
    index: usize,
    t_a: f64,
    t_b: f64,
    gap: f64,
    allowance: f64,
}

/// Strict eigenvalues of `a` and `b` that agree within twice the larger error estimate.
pub fn isospectral_pairs(a: &SpectrumReport, b: &SpectrumReport) -> Vec<(usize, f64, f64)> {
    a.strict_matches()
        .filter_map(|ma| {
            let mb = b.strict_matches().find(|m| m.index == ma.index)?;
            let gap = (ma.computed? - mb.computed?).abs();
            Some((ma.index, gap, 2.0 * ma.error_estimate.max(mb.error_estimate)))
        })
        .collect()
}

fn spectrum_suite(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let options = SpectrumOptions::default();
    let h = ctx.options().spectrum_h;
    let reports = parallel::map_ordered(&ctx.grid.t, ctx.parallel, |&t| {
        spectrum(ctx.params, ctx.n, t, h, &options)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut passed = true;
    let mut worst = 0.0f64;
    for r in &reports {
        let strict: Vec<_> = r.matches.iter().filter(|m| m.strict).collect();
        passed &= strict.iter().all(|m| m.abs_error.is_some_and(|e| e <= tol));
        worst = nan_max(worst, r.max_strict_error());
        passed &= r.accumulation.windows(2).all(|w| w[1].count <= w[0].count);
    }
    let mut pairs = Vec::new();
    for w in reports.windows(2) {
        for (index, gap, allowance) in isospectral_pairs(&w[0], &w[1]) {
            passed &= gap <= allowance;
            pairs.push(IsospectralPair {
                index,
                t_a: w[0].t,
                t_b: w[1].t,
                gap,
                allowance,
            });
        }
    }
    let strict = reports.first().map_or(0, |r| r.strict_matches().count());
    #[derive(Serialize)]
    struct Body<'a> {
        reports: &'a [SpectrumReport],
        isospectral: &'a [IsospectralPair],
    }
    Ok(Checked {
        passed,
        metrics: metrics([
            ("max_strict_error", worst),
            ("strict_matches", strict as f64),
            ("max_isospectral_gap", pairs.iter().fold(0.0, |m, p| nan_max(m, p.gap))),
        ]),
        files: vec![(
            "spectrum.json".into(),
            versioned(
                Suite::Spectrum,
                Body {
                    reports: &reports,
                    isospectral: &pairs,
                },
            ),
        )],
    })
}

fn scatter_suite(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let o = ctx.options();
    let reports: Vec<ScatteringReport> = parallel::map_ordered(&ctx.grid.t, ctx.parallel, |&t| {
        scatter(ctx.params, ctx.n, t, o.scatter_du, o.scatter_window_tol, &o.k_grid)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let fold = |f: fn(&ScatteringReport) -> f64| reports.iter().map(f).fold(0.0, nan_max);
    let (r, td, u) = (
        fold(ScatteringReport::max_reflection),
        fold(ScatteringReport::max_transmission_defect),
        fold(ScatteringReport::max_unitarity_defect),
    );
    let rows = reports.iter().flat_map(|rep| {
        rep.entries.iter().map(move |e| {
            vec![
                rep.t,
                e.k,
                e.t_ode.re,
                e.t_ode.im,
                e.r_ode.re,
                e.r_ode.im,
                e.t_formula.re,
                e.t_formula.im,
                e.t_defect,
                e.unitarity_defect,
            ]
        })
    });
    let header = [
        "t",
        "k",
        "T_re",
        "T_im",
        "R_re",
        "R_im",
        "product_re",
        "product_im",
        "t_defect",
        "unitarity_defect",
    ];
    #[derive(Serialize)]
    struct Body<'a> {
        reports: &'a [ScatteringReport],
    }
    Ok(Checked {
        passed: r <= tol && u <= tol && td <= 10.0 * tol,
        metrics: metrics([
            ("max_reflection", r),
            ("max_transmission_defect", td),
            ("max_unitarity_defect", u),
        ]),
        files: vec![
            ("scatter.csv".into(), csv_table(&header, rows)),
            (
                "scatter.json".into(),
                versioned(Suite::Scatter, Body { reports: &reports }),
            ),
        ],
    })
}

#[derive(Serialize)]
struct InvariantsAt {
    t: f64,
    traces: Vec<TraceRelation>,
    /// `int chi_2`, `int chi_4`: total derivatives, so zero up to quadrature error.
    even_integrals: Vec<f64>,
    bounds: BoundReport,
}

fn invariants(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let du = ctx.options().invariants_du;
    let per_t = parallel::map_ordered(&ctx.grid.t, ctx.parallel, |&t| -> Result<InvariantsAt, Error> {
        let densities = sample_invariants(ctx.params, ctx.n, t, 5, du)?;
        let traces = densities
            .iter()
            .filter(|d| d.order % 2 == 1)
            .map(|d| trace_relation(ctx.params, ctx.n, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InvariantsAt {
            t,
            traces,
            even_integrals: densities
                .iter()
                .filter(|d| d.order % 2 == 0)
                .map(|d| d.integral)
                .collect(),
            bounds: bound_check(ctx.params, ctx.n, &densities, tol)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let worst = per_t
        .iter()
        .flat_map(|p| &p.traces)
        .map(|r| r.defect)
        .fold(0.0, nan_max);
    let passed = per_t.iter().all(|p| {
        p.traces.iter().all(|r| r.defect <= tol + r.tail_budget) && p.bounds.all_hold() && p.bounds.all_saturated()
    });
    #[derive(Serialize)]
    struct Body<'a> {
        order: usize,
        times: &'a [InvariantsAt],
    }
    Ok(Checked {
        passed,
        metrics: metrics([
            ("max_trace_defect", worst),
            (
                "max_even_integral",
                per_t
                    .iter()
                    .flat_map(|p| &p.even_integrals)
                    .fold(0.0, |m, x| nan_max(m, x.abs())),
            ),
        ]),
        files: vec![(
            "invariants.json".into(),
            versioned(
                Suite::Invariants,
                Body {
                    order: ctx.n,
                    times: &per_t,
                },
            ),
        )],
    })
}

fn converge(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let ladder = &ctx.options().ladder;
    let norms = [Norm::L1, Norm::L2, Norm::Linf];
    let params = prepare_ladder(ctx.params, ladder, &norms)?;
    let samples = parallel::map_ordered(ladder, ctx.parallel, |&n| {
        parallel::sample(&params, n, ctx.grid, &[], false)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let study: ConvergenceStudy = assemble_study(&params, ladder, &[Partial::V], &norms, &samples)?;
    let passed = study.sup_decreasing.iter().all(|(_, ok)| *ok)
        && study.norms_decreasing.iter().all(|(_, ok)| *ok)
        && study.empirical_constant <= tol;
    let rows = study.pairs.iter().map(|p| {
        let norm = |n| p.norm_of(n).unwrap_or(f64::NAN);
        vec![
            p.n_from as f64,
            p.n_to as f64,
            p.sup_of(Partial::V).unwrap_or(f64::NAN),
            norm(Norm::L1),
            norm(Norm::L2),
            p.tail_bound,
        ]
    });
    let csv = csv_table(&["n_from", "n_to", "sup", "L1", "L2", "tail_bound"], rows);
    Ok(Checked {
        passed,
        metrics: metrics([
            ("empirical_constant", study.empirical_constant),
            (
                "last_sup_difference",
                study.pairs.last().and_then(|p| p.sup_of(Partial::V)).unwrap_or(0.0),
            ),
        ]),
        files: vec![
            ("converge.csv".into(), csv),
            ("converge.json".into(), versioned(Suite::Converge, &study)),
        ],
    })
}

/// The sample points used by `mfunction`: `side^2` points with
/// `Re z = -5 + 9 a / (side - 1)` and `Im z = 5 (b / side)^2`.
pub fn mfunction_points(side: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(side * side);
    for a in 0..side {
        let re = if side == 1 {
            -5.0
        } else {
            -5.0 + 9.0 * a as f64 / (side - 1) as f64
        };
        for b in 1..=side {
            let r = b as f64 / side as f64;
            out.push(Complex64::new(re, 5.0 * r * r));
        }
    }
    out
}

fn mfunction(ctx: &Context, tol: f64) -> Result<Checked, Error> {
    let points = mfunction_points(ctx.options().mfunction_side);
    let i = Complex64::new(0.0, 1.0);
    let mut rows = Vec::new();
    let (mut half_plane, mut symmetry, mut free) = (true, 0.0f64, 0.0f64);
    for &t in &ctx.grid.t {
        for &z in &points {
            let mp = weyl_m(ctx.params, ctx.n, t, z, Side::Plus)?;
            let mm = weyl_m(ctx.params, ctx.n, t, z, Side::Minus)?;
            half_plane &= mp.im > 0.0 && mm.im < 0.0;
            let conj = weyl_m(ctx.params, ctx.n, t, z.conj(), Side::Plus)?;
            symmetry = nan_max(symmetry, (conj - mp.conj()).norm() / (1.0 + mp.norm()));
            let w = upper_sqrt(z);
            let f_plus = weyl_m(ctx.params, 0, t, z, Side::Plus)?;
            let f_minus = weyl_m(ctx.params, 0, t, z, Side::Minus)?;
            free = nan_max(free, nan_max((f_plus - i * w).norm(), (f_minus + i * w).norm()));
            rows.push(vec![t, z.re, z.im, mp.re, mp.im, mm.re, mm.im]);
        }
    }
    Ok(Checked {
        passed: half_plane && free <= tol,
        metrics: metrics([
            ("half_plane", if half_plane { 1.0 } else { 0.0 }),
            ("conjugate_symmetry_gap", symmetry),
            ("free_case_gap", free),
            ("points", (points.len() * ctx.grid.t.len()) as f64),
        ]),
        files: vec![(
            "mfunction.csv".into(),
            csv_table(
                &[
                    "t",
                    "z_re",
                    "z_im",
                    "m_plus_re",
                    "m_plus_im",
                    "m_minus_re",
                    "m_minus_im",
                ],
                rows,
            ),
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
            assert!(!s.explain().is_empty());
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn mfunction_sample_square() {
        let p = mfunction_points(10);
        assert_eq!(p.len(), 100);
        assert!(p.iter().all(|z| z.im > 0.0 && z.re >= -5.0 && z.re <= 4.0));
        assert_eq!(p[0], Complex64::new(-5.0, 0.05));
    }
}
