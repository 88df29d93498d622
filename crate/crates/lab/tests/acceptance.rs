//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use soliton_core::determinant::{build, evaluate_expansion, principal_minor_expansion};
use soliton_core::field::{potential_det, potential_sq, sample_field, Grid, Partial};
use soliton_core::invariants::{bound_check, sample_invariants, trace_relation};
use soliton_core::limit::{run_study, Norm, DEFAULT_LADDER};
use soliton_core::params::{generate, SolitonParams, TailRule};
use soliton_core::spectral::{scatter, spectrum, upper_sqrt, weyl_m, Side, SpectrumOptions, SpectrumReport};
use soliton_core::Complex64;
use soliton_lab::suite::{isospectral_pairs, mfunction_points};

type Check = Result<String, String>;

fn halving(n: usize) -> SolitonParams {
    generate(TailRule::Geometric { ratio: 0.5, base: 0.5 }, n).unwrap()
}

fn within(limit: Duration, started: Instant, detail: String, ok: bool) -> Check {
    let took = started.elapsed();
    let detail = format!("{detail}; {:.2} s", took.as_secs_f64());
    if !ok {
        Err(detail)
    } else if took > limit {
        Err(format!("{detail} exceeds {} s", limit.as_secs()))
    } else {
        Ok(detail)
    }
}

fn one_soliton() -> Check {
    let started = Instant::now();
    let p = SolitonParams::explicit(vec![1.0], vec![std::f64::consts::SQRT_2]).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..=1600 {
        let x = -8.0 + i as f64 * 0.01;
        let sech = 1.0 / x.cosh();
        let v = potential_det(&p, 1, 0.0, x).map_err(|e| e.to_string())?;
        worst = worst.max((v + 2.0 * sech * sech).abs());
    }
    within(
        Duration::from_secs(1),
        started,
        format!("max |V + 2 sech^2| = {worst:.1e}"),
        worst <= 1e-10,
    )
}

fn two_potentials() -> Check {
    let started = Instant::now();
    let p = halving(32);
    let mut worst = 0.0f64;
    for t in [0.0, 0.5] {
        for i in 0..=400 {
            let x = -10.0 + i as f64 * 0.05;
            let a = potential_det(&p, 32, t, x).map_err(|e| e.to_string())?;
            let b = potential_sq(&p, 32, t, x).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    within(
        Duration::from_secs(10),
        started,
        format!("max relative gap {worst:.1e}"),
        worst <= 1e-9,
    )
}

fn kdv_residual() -> Check {
    let started = Instant::now();
    let p = halving(32);
    let grid = Grid::uniform(vec![0.0, 0.25, 0.5], -10.0, 10.0, 400).map_err(|e| e.to_string())?;
    let sample = sample_field(&p, 32, &grid, &[Partial::VT, Partial::VX, Partial::VXXX]).map_err(|e| e.to_string())?;
    let res = sample.kdv_residuals().ok_or("missing partials")?;
    let max_res = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let max_vxxx = sample
        .column(Partial::VXXX)
        .unwrap()
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));

    // Independent residual from central differences of V itself.
    let h = 0.01;
    let v = |t: f64, x: f64| potential_det(&p, 32, t, x).unwrap();
    let mut fd_worst = 0.0f64;
    for i in 0..20 {
        let (t, x) = (0.1 + 0.015 * i as f64, -9.0 + 0.9 * i as f64);
        let d1 = |f: &dyn Fn(f64) -> f64, s: f64| {
            (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h)
        };
        let vt = d1(&|s| v(s, x), t);
        let vx = d1(&|s| v(t, s), x);
        let vxxx = (v(t, x - 3.0 * h) - 8.0 * v(t, x - 2.0 * h) + 13.0 * v(t, x - h) - 13.0 * v(t, x + h)
            + 8.0 * v(t, x + 2.0 * h)
            - v(t, x + 3.0 * h))
            / (8.0 * h * h * h);
        fd_worst = fd_worst.max((vt - 6.0 * v(t, x) * vx + vxxx).abs());
    }
    let ok = max_res <= 1e-6 * (1.0 + max_vxxx) && fd_worst <= 1e-5;
    within(
        Duration::from_secs(30),
        started,
        format!("max residual {max_res:.1e} (max |V_xxx| {max_vxxx:.2}), difference-quotient residual {fd_worst:.1e}"),
        ok,
    )
}

fn eigen_reports() -> Result<(SpectrumReport, SpectrumReport, SpectrumReport, Duration), String> {
    let started = Instant::now();
    let options = SpectrumOptions::default();
    let at0 = spectrum(&halving(8), 8, 0.0, 0.005, &options).map_err(|e| e.to_string())?;
    let took = started.elapsed();
    let at_half = spectrum(&halving(8), 8, 0.5, 0.005, &options).map_err(|e| e.to_string())?;
    let four = spectrum(&halving(4), 4, 0.0, 0.005, &options).map_err(|e| e.to_string())?;
    Ok((at0, at_half, four, took))
}

fn eigenvalues(at0: &SpectrumReport, four: &SpectrumReport, took: Duration) -> Check {
    let mut worst = 0.0f64;
    let mut matched = 0;
    for j in 1..=5 {
        let target = -(0.25f64).powi(j);
        let m = at0
            .matches
            .iter()
            .find(|m| m.index == j as usize)
            .ok_or(format!("no eigenvalue for j = {j}"))?;
        let err = (m.computed.ok_or(format!("j = {j} not computed"))? - target).abs();
        worst = worst.max(err);
        matched += usize::from(m.strict);
    }
    let counts: Vec<usize> = at0.accumulation.iter().map(|a| a.count).collect();
    let counts4: Vec<usize> = four.accumulation.iter().map(|a| a.count).collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]) && counts.iter().zip(&counts4).all(|(a, b)| a >= b);
    let detail = format!(
        "max error j <= 5: {worst:.1e}, strict {matched}/5, counts below -delta N=8 {counts:?} N=4 {counts4:?}"
    );
    let ok = worst <= 1e-4 && matched == 5 && monotone;
    if !ok {
        return Err(detail);
    }
    if took > Duration::from_secs(60) {
        return Err(format!("{detail}; {:.1} s exceeds 60 s", took.as_secs_f64()));
    }
    Ok(format!("{detail}; {:.2} s", took.as_secs_f64()))
}

fn isospectral(at0: &SpectrumReport, at_half: &SpectrumReport) -> Check {
    let pairs = isospectral_pairs(at0, at_half);
    let worst = pairs.iter().map(|(_, gap, allow)| gap / allow).fold(0.0f64, f64::max);
    let detail = format!(
        "{} strict eigenvalues, largest gap / (2 x estimate) = {worst:.2}",
        pairs.len()
    );
    if pairs.len() >= 5 && worst <= 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reflectionless() -> Check {
    let started = Instant::now();
    let p = halving(8);
    let ks = [0.5, 1.0, 2.0, 4.0];
    let report = scatter(&p, 8, 0.0, 1e-3, 1e-10, &ks).map_err(|e| e.to_string())?;
    let i = Complex64::new(0.0, 1.0);
    let mut t_gap = 0.0f64;
    for e in &report.entries {
        let product: Complex64 = (1..=8)
            .map(|j| {
                let kappa = 0.5f64.powi(j);
                (e.k + i * kappa) / (e.k - i * kappa)
            })
            .product();
        t_gap = t_gap.max((e.t_ode - product).norm());
    }
    let (r, u) = (report.max_reflection(), report.max_unitarity_defect());
    let ok = r <= 1e-6 && t_gap <= 1e-5 && u <= 1e-6;
    within(
        Duration::from_secs(60),
        started,
        format!("|R| {r:.1e}, |T - product| {t_gap:.1e}, unitarity {u:.1e}"),
        ok,
    )
}

fn traces() -> Check {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut saturated = true;
    for n in [1usize, 8, 32] {
        let p = halving(n);
        let densities = sample_invariants(&p, n, 0.0, 5, 0.01).map_err(|e| e.to_string())?;
        for d in densities.iter().filter(|d| d.order % 2 == 1) {
            let r = trace_relation(&p, n, d).map_err(|e| e.to_string())?;
            let m = (d.order - 1) / 2;
            let rhs: f64 = 4f64.powi(m as i32 + 1) / (2 * m + 1) as f64
                * (1..=n)
                    .map(|j| 0.5f64.powi(j as i32).powi(2 * m as i32 + 1))
                    .sum::<f64>();
            worst = worst.max((r.lhs - rhs).abs() / rhs);
        }
        let bounds = bound_check(&p, n, &densities[..3], 1e-6).map_err(|e| e.to_string())?;
        saturated &= bounds.all_hold() && bounds.all_saturated();
    }
    within(
        Duration::from_secs(60),
        started,
        format!("max relative defect n = 0, 1, 2: {worst:.1e}; first upper and lower bounds saturated: {saturated}"),
        worst <= 1e-6 && saturated,
    )
}

fn convergence() -> Check {
    let started = Instant::now();
    let grid = Grid::uniform(vec![-0.5, -0.25, 0.0, 0.25, 0.5], -5.0, 5.0, 101).map_err(|e| e.to_string())?;
    let study = run_study(
        &halving(8),
        &DEFAULT_LADDER,
        &grid,
        &[Partial::V],
        &[Norm::L1, Norm::Linf],
    )
    .map_err(|e| e.to_string())?;
    let sups: Vec<f64> = study.pairs.iter().map(|p| p.sup_of(Partial::V).unwrap()).collect();
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let l1: Vec<f64> = study.pairs.iter().map(|p| p.norm_of(Norm::L1).unwrap()).collect();
    let linf: Vec<f64> = study.pairs.iter().map(|p| p.norm_of(Norm::Linf).unwrap()).collect();
    let bounded = study
        .pairs
        .iter()
        .all(|p| p.sup_of(Partial::V).unwrap() <= study.empirical_constant * p.tail_bound);
    let ok = decreasing(&sups) && decreasing(&l1) && decreasing(&linf) && bounded && study.empirical_constant <= 1.0;
    let sups: Vec<String> = sups.iter().map(|s| format!("{s:.1e}")).collect();
    within(
        Duration::from_secs(60),
        started,
        format!(
            "sup differences [{}], constant {:.3}",
            sups.join(", "),
            study.empirical_constant
        ),
        ok,
    )
}

/// `det(1 + C)` by Gaussian elimination with partial pivoting.
fn naive_det(n: usize, entry: impl Fn(usize, usize) -> f64) -> f64 {
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|l| entry(j, l) + if j == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let (top, rest) = a.split_at_mut(r);
            for (y, p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *y -= f * p;
            }
        }
    }
    det
}

fn minor_expansion() -> Check {
    let started = Instant::now();
    let mut worst = 0.0f64;
    let mut positive = true;
    for n in 1..=6 {
        let p = halving(n);
        let terms = principal_minor_expansion(&p, n).map_err(|e| e.to_string())?;
        positive &= terms.len() == (1 << n) - 1 && terms.iter().all(|t| t.coefficient > 0.0);
        for i in 0..20 {
            let x = -4.0 + 0.4 * i as f64;
            let logdet = build(&p, n, 0.0, x).map_err(|e| e.to_string())?.logdet();
            let k = p.kappas();
            let oracle = naive_det(n, |j, l| {
                let g = |m: usize| k[m] * (-k[m] * x).exp();
                g(j) * g(l) / (k[j] + k[l])
            })
            .ln();
            let expanded = evaluate_expansion(&terms, x).ln();
            worst = worst.max((expanded - logdet).abs()).max((oracle - logdet).abs());
        }
    }
    within(
        Duration::from_secs(10),
        started,
        format!("all coefficients positive: {positive}; max log-det gap {worst:.1e}"),
        positive && worst <= 1e-10,
    )
}

fn m_functions() -> Check {
    let started = Instant::now();
    let p = halving(8);
    let i = Complex64::new(0.0, 1.0);
    let points = mfunction_points(10);
    let mut upper = 0;
    let mut lower = 0;
    let mut free = 0.0f64;
    for &z in &points {
        let mp = weyl_m(&p, 8, 0.0, z, Side::Plus).map_err(|e| e.to_string())?;
        let mm = weyl_m(&p, 8, 0.0, z, Side::Minus).map_err(|e| e.to_string())?;
        upper += usize::from(mp.im > 0.0);
        lower += usize::from(mm.im < 0.0);
        let w = z.sqrt();
        let w = if w.im < 0.0 { -w } else { w };
        assert_eq!(w, upper_sqrt(z));
        let fp = weyl_m(&p, 0, 0.0, z, Side::Plus).map_err(|e| e.to_string())?;
        let fm = weyl_m(&p, 0, 0.0, z, Side::Minus).map_err(|e| e.to_string())?;
        free = free.max((fp - i * w).norm()).max((fm + i * w).norm());
    }
    let n = points.len();
    within(
        Duration::from_secs(10),
        started,
        format!("Im m+ > 0 at {upper}/{n}, Im m- < 0 at {lower}/{n}; free case gap {free:.1e}"),
        upper == n && lower == n && n == 100 && free <= 1e-12,
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Check)> = vec![
        ("one-soliton closed form", one_soliton()),
        ("determinant vs eigenfunction potential", two_potentials()),
        ("KdV residual", kdv_residual()),
    ];
    match eigen_reports() {
        Ok((at0, at_half, four, took)) => {
            results.push(("bound-state eigenvalues", eigenvalues(&at0, &four, took)));
            results.push(("isospectral in t", isospectral(&at0, &at_half)));
        }
        Err(e) => {
            results.push(("bound-state eigenvalues", Err(e.clone())));
            results.push(("isospectral in t", Err(e)));
        }
    }
    results.push(("reflectionless scattering", reflectionless()));
    results.push(("trace relations", traces()));
    results.push(("truncation convergence", convergence()));
    results.push(("principal minor expansion", minor_expansion()));
    results.push(("m-function half-planes", m_functions()));

    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
