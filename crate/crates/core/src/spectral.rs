//! Spectral and scattering checks on sampled potentials: finite-difference
//! eigenvalues of `-d^2/dx^2 + V` against `{-kappa_j^2}`, transmission and
//! reflection from Jost integration against the product formula, and the
//! half-line Weyl m-functions.

use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{eigenfunctions, sample_field, soliton_centre, Axis, Grid, PotentialSlice, Profile};
use crate::params::SolitonParams;
use crate::{Error, Result};

/// Number of eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `d` and off-diagonal `e` that lie below `lambda`.
pub fn sturm_count(d: &[f64], e: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - lambda - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + lambda.abs() + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection inside `[lo, hi]`.
fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `count` smallest eigenvalues, ascending.
pub fn lowest_eigenvalues(d: &[f64], e: &[f64], count: usize) -> Vec<f64> {
    let (lo, hi) = gershgorin(d, e);
    (0..count.min(d.len()))
        .map(|k| kth_eigenvalue(d, e, k, lo, hi))
        .collect()
}

/// Three-point discretization of `-u'' + V u` on the interior nodes, with
/// `u = 0` at the first and last samples. Uses every `stride`-th sample.
fn discretize(values: &[f64], h: f64, stride: usize) -> (Vec<f64>, Vec<f64>) {
    let h = h * stride as f64;
    let interior: Vec<f64> = values.iter().step_by(stride).copied().collect();
    let inner = &interior[1..interior.len() - 1];
    let d = inner.iter().map(|v| 2.0 / (h * h) + v).collect();
    let e = alloc::vec![-1.0 / (h * h); inner.len().saturating_sub(1)];
    (d, e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Targets with `kappa` below this are reported but not strictly matched.
    pub kappa_floor: f64,
    /// Window for the eigenvalue counts near 0.
    pub deltas: Vec<f64>,
    /// Required size of the matched eigenfunctions at the window edges.
    pub psi_edge: f64,
    /// `|V|` at the edges must stay below `v_edge_ratio * kappa_ref^2`.
    pub v_edge_ratio: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            kappa_floor: 0.0,
            deltas: alloc::vec![1e-1, 1e-2, 1e-3, 1e-4],
            psi_edge: 1e-8,
            v_edge_ratio: 1e-2,
        }
    }
}

impl SpectrumOptions {
    /// Whether `-kappa^2` is resolved on a grid of spacing `h`.
    pub fn is_strict(&self, kappa: f64, h: f64) -> bool {
        kappa >= self.kappa_floor && kappa * kappa > 10.0 * h * h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMatch {
    /// 1-based index of the target `-kappa_j^2`.
    pub index: usize,
    pub target: f64,
    /// Extrapolated eigenvalue, if the discretization produced one.
    pub computed: Option<f64>,
    /// `|lambda_h - lambda_2h| / 3` plus the round-off floor of the solver.
    pub error_estimate: f64,
    pub abs_error: Option<f64>,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulationCount {
    pub delta: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub t: f64,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Negative eigenvalues after extrapolation, ascending.
    pub computed: Vec<f64>,
    /// `-kappa_j^2`, ascending.
    pub targets: Vec<f64>,
    pub matches: Vec<EigenMatch>,
    pub accumulation: Vec<AccumulationCount>,
}

impl SpectrumReport {
    pub fn strict_matches(&self) -> impl Iterator<Item = &EigenMatch> {
        self.matches.iter().filter(|m| m.strict)
    }

    /// Largest error over strictly matched targets; infinite if one is missing.
    pub fn max_strict_error(&self) -> f64 {
        self.strict_matches()
            .map(|m| m.abs_error.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn count_below(&self, delta: f64) -> usize {
        self.computed.iter().filter(|&&l| l > -delta && l < 0.0).count()
    }
}

/// Eigenvalues of the discretized operator on `slice`, extrapolated from the
/// spacings `h` and `2h`, and paired with `-kappa_j^2` from the bottom.
pub fn discretize_and_eig(slice: &PotentialSlice, kappas: &[f64], options: &SpectrumOptions) -> Result<SpectrumReport> {
    let n = slice.len();
    if n < 7 || n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(
            "eigen solve needs an odd sample count of at least 7",
        ));
    }
    let h = slice.h;
    let mut order: Vec<usize> = (0..kappas.len()).collect();
    order.sort_by(|&a, &b| kappas[b].total_cmp(&kappas[a]));
    let targets: Vec<f64> = order.iter().map(|&j| -kappas[j] * kappas[j]).collect();

    let strict_min = order
        .iter()
        .map(|&j| kappas[j])
        .filter(|&k| options.is_strict(k, h))
        .fold(f64::INFINITY, f64::min);
    if strict_min.is_finite() {
        let limit = options.v_edge_ratio * strict_min * strict_min;
        let edge = slice.values[0].abs().max(slice.values[n - 1].abs());
        if edge > limit {
            return Err(Error::GridTooNarrow { value: edge, limit });
        }
    }

    let (d, e) = discretize(&slice.values, h, 1);
    let negatives = sturm_count(&d, &e, 0.0);
    let fine = lowest_eigenvalues(&d, &e, negatives);
    let (d2, e2) = discretize(&slice.values, h, 2);
    let coarse = lowest_eigenvalues(&d2, &e2, negatives);
    // Bisection is accurate to a few ulps of the matrix norm.
    let floor = 64.0 * f64::EPSILON * 4.0 / (h * h);

    let mut computed = Vec::with_capacity(negatives);
    let mut errors = Vec::with_capacity(negatives);
    for i in 0..negatives {
        match coarse.get(i) {
            Some(&c) => {
                computed.push((4.0 * fine[i] - c) / 3.0);
                errors.push((fine[i] - c).abs() / 3.0 + floor);
            }
            None => {
                computed.push(fine[i]);
                errors.push(fine[i].abs());
            }
        }
    }

    let mut matches = Vec::with_capacity(targets.len());
    for (rank, (&j, &target)) in order.iter().zip(&targets).enumerate() {
        let strict = options.is_strict(kappas[j], h);
        let value = computed.get(rank).copied();
        let error_estimate = errors.get(rank).copied().unwrap_or(f64::INFINITY);
        if strict && error_estimate > 0.1 * target.abs() {
            return Err(Error::GridTooCoarse {
                index: j + 1,
                shift: error_estimate,
            });
        }
        matches.push(EigenMatch {
            index: j + 1,
            target,
            computed: value,
            error_estimate,
            abs_error: value.map(|v| (v - target).abs()),
            strict,
        });
    }
    let mut report = SpectrumReport {
        t: slice.t,
        h,
        x_min: slice.x0,
        x_max: slice.x(n - 1),
        computed,
        targets,
        matches,
        accumulation: Vec::new(),
    };
    report.accumulation = options
        .deltas
        .iter()
        .map(|&delta| AccumulationCount {
            delta,
            count: report.count_below(delta),
        })
        .collect();
    Ok(report)
}

fn centres(params: &SolitonParams, n: usize, t: f64) -> (f64, f64) {
    (0..n)
        .map(|j| soliton_centre(params.kappas()[j], params.norming()[j], t))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c), hi.max(c)))
}

const MAX_WINDOW_STEPS: usize = 200;

/// Grows `[lo, hi]` around the solitons until `ok(x)` holds at each edge.
fn grow_window(
    params: &SolitonParams,
    n: usize,
    t: f64,
    start: f64,
    mut ok: impl FnMut(f64) -> Result<bool>,
) -> Result<(f64, f64)> {
    let (c_lo, c_hi) = centres(params, n, t);
    let (mut left, mut right) = (start, start);
    let (mut left_ok, mut right_ok) = (false, false);
    for _ in 0..MAX_WINDOW_STEPS {
        if !left_ok {
            left_ok = ok(c_lo - left)?;
        }
        if !right_ok {
            right_ok = ok(c_hi + right)?;
        }
        if left_ok && right_ok {
            return Ok((c_lo - left, c_hi + right));
        }
        if !left_ok {
            left *= 1.25;
        }
        if !right_ok {
            right *= 1.25;
        }
    }
    Err(Error::GridTooNarrow {
        value: left.max(right),
        limit: f64::INFINITY,
    })
}

/// Window where the strictly matched eigenfunctions are below
/// `options.psi_edge` and `|V|` below the edge limit.
pub fn spectrum_window(
    params: &SolitonParams,
    n: usize,
    t: f64,
    h: f64,
    options: &SpectrumOptions,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((-20.0, 20.0));
    }
    let kappas = &params.kappas()[..n];
    let strict: Vec<usize> = (0..n).filter(|&j| options.is_strict(kappas[j], h)).collect();
    let k_ref = strict.iter().map(|&j| kappas[j]).fold(f64::INFINITY, f64::min);
    let k_ref = if k_ref.is_finite() {
        k_ref
    } else {
        kappas.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let limit = options.v_edge_ratio * k_ref * k_ref;
    grow_window(params, n, t, 4.0 / k_ref, |x| {
        let col = eigenfunctions(params, n, t, x)?;
        let v = crate::field::squared_form(kappas, &col.psi);
        Ok(v.abs() < limit && strict.iter().all(|&j| col.psi[j].abs() < options.psi_edge))
    })
}

/// Window where the neglected potential `|V(edge)| / (2 kappa_min)` is below `tol`.
pub fn scatter_window(params: &SolitonParams, n: usize, t: f64, tol: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((-20.0, 20.0));
    }
    let kappas = &params.kappas()[..n];
    let k_min = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    grow_window(params, n, t, 4.0 / k_min, |x| {
        let col = eigenfunctions(params, n, t, x)?;
        let v = crate::field::squared_form(kappas, &col.psi);
        Ok(v.abs() / (2.0 * k_min) < tol)
    })
}

/// `V(t, .)` on evenly spaced nodes covering `[x_min, x_max]` with spacing
/// at most `h` and an even number of intervals.
pub fn potential_slice(
    params: &SolitonParams,
    n: usize,
    t: f64,
    x_min: f64,
    x_max: f64,
    h: f64,
) -> Result<PotentialSlice> {
    let axis = Axis::with_spacing(x_min, x_max, h)?;
    sample_field(params, n, &Grid::new(alloc::vec![t], axis)?, &[])?.slice(0)
}

/// [`discretize_and_eig`] on the window chosen by [`spectrum_window`].
pub fn spectrum(params: &SolitonParams, n: usize, t: f64, h: f64, options: &SpectrumOptions) -> Result<SpectrumReport> {
    let (lo, hi) = spectrum_window(params, n, t, h, options)?;
    let slice = potential_slice(params, n, t, lo, hi, h)?;
    discretize_and_eig(&slice, &params.kappas()[..n], options)
}

/// Monomial coefficients in `s = (x - x[i]) / (x[i+1] - x[i])` of the cubic
/// through four nodes around the step `[x[i], x[i+1]]`.
fn local_cubic(x: &[f64], v: &[f64], i: usize) -> [f64; 4] {
    let n = x.len();
    let h = x[i + 1] - x[i];
    if n < 4 {
        return [v[i], v[i + 1] - v[i], 0.0, 0.0];
    }
    let first = i.saturating_sub(1).min(n - 4);
    let s: [f64; 4] = core::array::from_fn(|j| (x[first + j] - x[i]) / h);
    let mut d: [f64; 4] = core::array::from_fn(|j| v[first + j]);
    for level in 1..4 {
        for j in (level..4).rev() {
            d[j] = (d[j] - d[j - 1]) / (s[j] - s[j - level]);
        }
    }
    // Horner on the Newton form
    let mut c = [d[3], 0.0, 0.0, 0.0];
    for j in (0..3).rev() {
        for m in (1..4).rev() {
            c[m] = c[m - 1] - s[j] * c[m];
        }
        c[0] = d[j] - s[j] * c[0];
    }
    c
}

/// `int_0^1 s^m e^{i phi s} ds` for `m = 0..=3`.
fn oscillatory_moments(phi: f64) -> [Complex64; 4] {
    if phi.abs() < 1.0 {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut fact = 1.0;
            for j in 0..30 {
                if j > 0 {
                    term *= Complex64::new(0.0, phi);
                    fact *= j as f64;
                }
                *slot += term / (fact * (m + j + 1) as f64);
            }
        }
        return out;
    }
    let iphi = Complex64::new(0.0, phi);
    let e = Complex64::cis(phi);
    let mut out = [(e - 1.0) / iphi; 4];
    for m in 1..4 {
        out[m] = (e - out[m - 1] * m as f64) / iphi;
    }
    out
}

/// `exp(w)` for a traceless 2x2 matrix `[[w00, w01], [w10, -w00]]`.
fn expm_traceless(w: [Complex64; 3]) -> [[Complex64; 2]; 2] {
    let [p, q, r] = w;
    let mu2 = p * p + q * r;
    let (ch, sh) = if mu2.norm() < 1e-4 {
        (1.0 + mu2 / 2.0 + mu2 * mu2 / 24.0, 1.0 + mu2 / 6.0 + mu2 * mu2 / 120.0)
    } else {
        let mu = mu2.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    };
    [[ch + sh * p, sh * q], [sh * r, ch - sh * p]]
}

/// Transmission and (left) reflection coefficients at wavenumber `k`.
///
/// The amplitudes of `u = a e^{ikx} + b e^{-ikx}` obey
/// `(a, b)' = V / (2ik) [[1, e^{-2ikx}], [-e^{2ikx}, -1]] (a, b)`, started at
/// `(1, 0)` on the right edge. Each step uses a fourth order Magnus update
/// with the first term integrated exactly against the local cubic of `V`,
/// so the step may be long compared with `1/k` wherever `V` is small.
pub fn jost_scatter(profile: &Profile, k: f64) -> Result<(Complex64, Complex64)> {
    let n = profile.len();
    if n < 2 || profile.values.len() != n {
        return Err(Error::InvalidGrid("scattering needs at least two samples"));
    }
    let width = profile.width();
    if !(k > 0.0) || k * width < 2.0 * core::f64::consts::PI {
        return Err(Error::WavenumberTooSmall { k, width });
    }
    let (x, v) = (&profile.x, &profile.values);
    let inv = Complex64::new(0.0, -0.5 / k);
    let g = [0.5 - libm::sqrt(3.0) / 6.0, 0.5 + libm::sqrt(3.0) / 6.0];
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for i in (0..n - 1).rev() {
        let h = x[i + 1] - x[i];
        let c = local_cubic(x, v, i);
        if c == [0.0; 4] {
            continue;
        }
        let moments = oscillatory_moments(2.0 * k * h);
        let j0 = h * (c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0);
        let jp = Complex64::cis(2.0 * k * x[i]) * h * (0..4).map(|m| moments[m] * c[m]).sum::<Complex64>();
        // A(s) = inv V(s) [[1, conj e], [-e, -1]], e = e^{2ikx}
        let at = |s: f64| {
            let vs = c[0] + s * (c[1] + s * (c[2] + s * c[3]));
            (inv * vs, Complex64::cis(2.0 * k * (x[i] + h * s)))
        };
        let ((f1, e1), (f2, e2)) = (at(g[0]), at(g[1]));
        // [A2, A1] for A = f [[1, e*], [-e, -1]]
        let ff = f1 * f2;
        let comm_p = ff * (e2 * e1.conj() - e1 * e2.conj());
        let comm_q = ff * (e1.conj() - e2.conj()) * 2.0;
        let comm_r = ff * (e1 - e2) * 2.0;
        let w2 = libm::sqrt(3.0) / 12.0 * h * h;
        let p = inv * j0 + comm_p * w2;
        let q = inv * jp.conj() + comm_q * w2;
        let r = -inv * jp + comm_r * w2;
        // step leftward: y(x_i) = exp(-Omega) y(x_{i+1})
        let m = expm_traceless([-p, -q, -r]);
        (a, b) = (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b);
    }
    Ok((a.inv(), b / a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionProduct {
    pub value: Complex64,
    /// `|log T_inf - log T_N| <= 2 sum_{j>N} kappa_j / k` for real `k` and summable kappas.
    pub tail_bound: Option<f64>,
}

/// `prod_{j<=N} (k + i kappa_j) / (k - i kappa_j)`.
pub fn transmission_product(params: &SolitonParams, n: usize, k: Complex64) -> Result<TransmissionProduct> {
    if n > params.len() {
        return Err(Error::OrderExceedsPrefix {
            requested: n,
            available: params.len(),
        });
    }
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::Pole);
    }
    let mut value = Complex64::new(1.0, 0.0);
    for &kappa in &params.kappas()[..n] {
        let den = k - Complex64::new(0.0, kappa);
        if den.norm() == 0.0 {
            return Err(Error::Pole);
        }
        value *= (k + Complex64::new(0.0, kappa)) / den;
    }
    let summable = params.class().is_some_and(|c| c.has_summable_kappas());
    let tail_bound = (summable && k.im == 0.0).then(|| 2.0 * params.kappa_sum_after(n) / k.re.abs());
    Ok(TransmissionProduct { value, tail_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterEntry {
    pub k: f64,
    pub t_ode: Complex64,
    pub r_ode: Complex64,
    pub t_formula: Complex64,
    pub r_abs: f64,
    pub t_defect: f64,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub t: f64,
    pub nodes: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub entries: Vec<ScatterEntry>,
}

impl ScatteringReport {
    pub fn max_reflection(&self) -> f64 {
        self.entries.iter().map(|e| e.r_abs).fold(0.0, f64::max)
    }

    pub fn max_transmission_defect(&self) -> f64 {
        self.entries.iter().map(|e| e.t_defect).fold(0.0, f64::max)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.entries.iter().map(|e| e.unitarity_defect).fold(0.0, f64::max)
    }
}

/// Jost integration against the product formula for each `k` in `ks`.
pub fn scatter_profile(params: &SolitonParams, n: usize, profile: &Profile, ks: &[f64]) -> Result<ScatteringReport> {
    let entries = ks
        .iter()
        .map(|&k| {
            let (t_ode, r_ode) = jost_scatter(profile, k)?;
            let t_formula = transmission_product(params, n, Complex64::new(k, 0.0))?.value;
            Ok(ScatterEntry {
                k,
                t_ode,
                r_ode,
                t_formula,
                r_abs: r_ode.norm(),
                t_defect: (t_ode - t_formula).norm(),
                unitarity_defect: (t_ode.norm_sqr() + r_ode.norm_sqr() - 1.0).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScatteringReport {
        t: profile.t,
        nodes: profile.len(),
        x_min: profile.x.first().copied().unwrap_or(0.0),
        x_max: profile.x.last().copied().unwrap_or(0.0),
        entries,
    })
}

/// Sinh-mapped axis over [`scatter_window`] with parameter spacing `du`.
pub fn scatter_axis(params: &SolitonParams, n: usize, t: f64, du: f64, tol: f64) -> Result<Axis> {
    let (lo, hi) = scatter_window(params, n, t, tol)?;
    if n == 0 {
        return Axis::with_spacing(lo, hi, du.max(1e-3));
    }
    Axis::around_solitons(params, n, t, lo, hi, du)
}

/// [`scatter_profile`] on [`scatter_axis`].
pub fn scatter(params: &SolitonParams, n: usize, t: f64, du: f64, tol: f64, ks: &[f64]) -> Result<ScatteringReport> {
    let axis = scatter_axis(params, n, t, du, tol)?;
    let profile = sample_field(params, n, &Grid::new(alloc::vec![t], axis)?, &[])?.profile(0)?;
    scatter_profile(params, n, &profile, ks)
}

/// Half-line `(0, +inf)` or `(-inf, 0)` with a Dirichlet condition at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// `sqrt z` with `Im sqrt z >= 0`, cut along `[0, inf)`.
pub fn upper_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Weyl m-function of the half-line problem, from the eigenfunction data at
/// `x = 0`:
///
/// ```text
/// m(z) = s i w - s [1 - s i sum c_j psi_j / (w + s i kappa_j)]^{-1}
///                  i sum c_j (psi_j' - kappa_j psi_j) / (w + s i kappa_j)
/// ```
///
/// with `w = sqrt z`, `s = +1` on the right half-line and `-1` on the left,
/// and `c_j(t) = c_j e^{4 kappa_j^3 t}`. `m_+` maps the upper half-plane
/// into itself, `m_-` into the lower one.
pub fn weyl_m(params: &SolitonParams, n: usize, t: f64, z: Complex64, side: Side) -> Result<Complex64> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::RealSpectralParameter);
    }
    let s = side.sign();
    let w = upper_sqrt(z);
    let i = Complex64::new(0.0, 1.0);
    let free = i * w * s;
    if n == 0 {
        return Ok(free);
    }
    let col = eigenfunctions(params, n, t, 0.0)?;
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let k = params.kappas()[j];
        let c = params.norming()[j] * libm::exp(4.0 * k * k * k * t);
        let den = w + i * (s * k);
        s1 += c * col.psi[j] / den;
        s2 += c * (col.dpsi_dx[j] - k * col.psi[j]) / den;
    }
    let denom = Complex64::new(1.0, 0.0) - i * s * s1;
    if denom.norm() == 0.0 {
        return Err(Error::Pole);
    }
    Ok(free - (i * s2 / denom) * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::potential_det;
    use crate::params::{generate, TailRule};
    use approx::assert_relative_eq;
    use core::f64::consts::SQRT_2;

    fn one() -> SolitonParams {
        SolitonParams::explicit(alloc::vec![1.0], alloc::vec![SQRT_2]).unwrap()
    }

    fn halving(n: usize) -> SolitonParams {
        generate(TailRule::Geometric { ratio: 0.5, base: 0.5 }, n).unwrap()
    }

    #[test]
    fn sturm_on_known_matrix() {
        // tridiag(-1, 2, -1) of size 5: 2 - 2 cos(j pi / 6)
        let d = [2.0; 5];
        let e = [-1.0; 4];
        let eig = lowest_eigenvalues(&d, &e, 5);
        for (j, l) in eig.iter().enumerate() {
            let exact = 2.0 - 2.0 * libm::cos((j + 1) as f64 * core::f64::consts::PI / 6.0);
            assert_relative_eq!(*l, exact, epsilon = 1e-14);
        }
        assert_eq!(sturm_count(&d, &e, 0.0), 0);
        assert_eq!(sturm_count(&d, &e, 2.0 + 1e-12), 3);
    }

    #[test]
    fn free_operator_has_no_bound_states() {
        let slice = PotentialSlice {
            t: 0.0,
            x0: -20.0,
            h: 0.01,
            values: alloc::vec![0.0; 4001],
        };
        let r = discretize_and_eig(&slice, &[], &SpectrumOptions::default()).unwrap();
        assert!(r.computed.is_empty() && r.matches.is_empty());
        let (t, rr) = jost_scatter(&Profile::from(&slice), 1.3).unwrap();
        assert_eq!((t, rr), (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn one_soliton_eigenvalue() {
        let slice = potential_slice(&one(), 1, 0.0, -20.0, 20.0, 0.01).unwrap();
        let r = discretize_and_eig(&slice, &[1.0], &SpectrumOptions::default()).unwrap();
        assert_eq!(r.computed.len(), 1);
        assert!(r.max_strict_error() <= 1e-4);
        assert!(r.matches[0].abs_error.unwrap() <= 3.0 * r.matches[0].error_estimate + 1e-12);
    }

    #[test]
    fn narrow_window_rejected() {
        let slice = potential_slice(&one(), 1, 0.0, -2.0, 2.0, 0.01).unwrap();
        assert!(matches!(
            discretize_and_eig(&slice, &[1.0], &SpectrumOptions::default()),
            Err(Error::GridTooNarrow { .. })
        ));
        let even = PotentialSlice {
            t: 0.0,
            x0: 0.0,
            h: 0.1,
            values: alloc::vec![0.0; 10],
        };
        assert!(discretize_and_eig(&even, &[], &SpectrumOptions::default()).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = SolitonParams::explicit(alloc::vec![6.0], alloc::vec![1.0]).unwrap();
        let slice = potential_slice(&p, 1, 0.0, -10.0, 10.0, 0.25).unwrap();
        assert!(matches!(
            discretize_and_eig(&slice, &[6.0], &SpectrumOptions::default()),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn one_soliton_scattering() {
        let slice = Profile::from(&potential_slice(&one(), 1, 0.0, -30.0, 30.0, 0.005).unwrap());
        let (t, r) = jost_scatter(&slice, 1.0).unwrap();
        assert!((t - Complex64::new(0.0, 1.0)).norm() < 1e-9, "{t}");
        assert!(r.norm() < 1e-9);
        assert!(matches!(
            jost_scatter(&slice, 0.05),
            Err(Error::WavenumberTooSmall { .. })
        ));
        let report = scatter(&one(), 1, 0.0, 0.002, 1e-12, &[0.5, 1.0, 4.0]).unwrap();
        assert!(report.max_transmission_defect() < 1e-9, "{report:?}");
        assert!(report.max_reflection() < 1e-9);
    }

    #[test]
    fn scattering_matches_independent_shooting() {
        // Numerov-free check: integrate u'' = (V - k^2) u directly with RK4 on
        // (u, u') from the right and read off A, B on the left.
        let p = halving(3);
        let (lo, hi) = scatter_window(&p, 3, 0.0, 1e-10).unwrap();
        let h = 0.005;
        let slice = potential_slice(&p, 3, 0.0, lo, hi, h).unwrap();
        let k = 0.7;
        let (t, r) = jost_scatter(&Profile::from(&slice), k).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let f = |x: f64, u: Complex64, du: Complex64| {
            let v = potential_det(&p, 3, 0.0, x).unwrap();
            (du, (v - k * k) * u)
        };
        let xr = slice.x(slice.len() - 1);
        let mut u = (i * k * xr).exp();
        let mut du = i * k * u;
        let steps = slice.len() - 1;
        let hh = -(xr - slice.x0) / steps as f64;
        let mut x = xr;
        for _ in 0..steps {
            let (a1, b1) = f(x, u, du);
            let (a2, b2) = f(x + hh / 2.0, u + a1 * (hh / 2.0), du + b1 * (hh / 2.0));
            let (a3, b3) = f(x + hh / 2.0, u + a2 * (hh / 2.0), du + b2 * (hh / 2.0));
            let (a4, b4) = f(x + hh, u + a3 * hh, du + b3 * hh);
            u += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (hh / 6.0);
            du += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (hh / 6.0);
            x += hh;
        }
        let e = (i * k * x).exp();
        let a = (u + du / (i * k)) / (e * 2.0);
        let b = (u - du / (i * k)) * e / 2.0;
        assert!((t - a.inv()).norm() < 1e-6);
        assert!((r - b / a).norm() < 1e-6);
        let formula = transmission_product(&p, 3, Complex64::new(k, 0.0)).unwrap().value;
        assert!((t - formula).norm() < 1e-6);
    }

    #[test]
    fn product_formula() {
        let p = one();
        let t = transmission_product(&p, 1, Complex64::new(1.0, 0.0)).unwrap();
        assert!((t.value - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(t.tail_bound, Some(0.0));
        let far = transmission_product(&halving(8), 8, Complex64::new(1e8, 0.0)).unwrap();
        assert!((far.value - 1.0).norm() < 1e-7);
        for k in [0.1, 0.5, 3.0] {
            let v = transmission_product(&halving(8), 8, Complex64::new(k, 0.0)).unwrap();
            assert_relative_eq!(v.value.norm(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(
                v.tail_bound.unwrap(),
                2.0 * libm::pow(0.5, 8.0) / k,
                max_relative = 1e-12
            );
        }
        assert_eq!(transmission_product(&p, 1, Complex64::new(0.0, 1.0)), Err(Error::Pole));
        assert_eq!(transmission_product(&p, 1, Complex64::new(0.0, 0.0)), Err(Error::Pole));
    }

    #[test]
    fn free_m_functions() {
        let z = Complex64::new(-0.3, 0.8);
        let w = upper_sqrt(z);
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(weyl_m(&one(), 0, 0.0, z, Side::Plus).unwrap(), i * w);
        assert_eq!(weyl_m(&one(), 0, 0.0, z, Side::Minus).unwrap(), -i * w);
        assert!(matches!(
            weyl_m(&one(), 1, 0.0, Complex64::new(2.0, 0.0), Side::Plus),
            Err(Error::RealSpectralParameter)
        ));
        // branch: Im sqrt > 0 on both sides of the positive axis
        assert!(upper_sqrt(Complex64::new(4.0, 1e-12)).re > 0.0);
        assert!(upper_sqrt(Complex64::new(4.0, -1e-12)).re < 0.0);
    }

    /// Log-derivative of the solution decaying toward `side`, by integrating
    /// the Riccati equation `w' = V - z - w^2` inward to 0.
    fn riccati_m(p: &SolitonParams, n: usize, t: f64, z: Complex64, side: Side) -> Complex64 {
        let s = side.sign();
        let len = 60.0;
        let steps = 24_000;
        let h = -s * len / steps as f64;
        // V at every half step, shared by the stages
        let v: Vec<f64> = (0..=2 * steps)
            .map(|i| potential_det(p, n, t, s * len + i as f64 * h / 2.0).unwrap())
            .collect();
        let mut w = Complex64::new(0.0, s) * upper_sqrt(z);
        let f = |v: f64, w: Complex64| v - z - w * w;
        for i in 0..steps {
            let k1 = f(v[2 * i], w);
            let k2 = f(v[2 * i + 1], w + k1 * (h / 2.0));
            let k3 = f(v[2 * i + 1], w + k2 * (h / 2.0));
            let k4 = f(v[2 * i + 2], w + k3 * h);
            w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        w
    }

    #[test]
    fn m_function_matches_riccati() {
        let p = SolitonParams::explicit(alloc::vec![1.0, 0.6], alloc::vec![1.5, 0.4]).unwrap();
        for &t in &[0.0, 0.3] {
            for z in [
                Complex64::new(0.5, 1.0),
                Complex64::new(-2.0, 0.5),
                Complex64::new(3.0, -0.7),
            ] {
                for side in [Side::Plus, Side::Minus] {
                    let m = weyl_m(&p, 2, t, z, side).unwrap();
                    let oracle = riccati_m(&p, 2, t, z, side);
                    assert!(
                        (m - oracle).norm() < 1e-8 * (1.0 + m.norm()),
                        "t={t} z={z} {side:?}: {m} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn m_function_half_plane_and_symmetry() {
        let p = halving(8);
        for a in 0..10 {
            for b in 1..=10 {
                let z = Complex64::new(-5.0 + a as f64, 0.05 * b as f64 * b as f64);
                let mp = weyl_m(&p, 8, 0.0, z, Side::Plus).unwrap();
                let mm = weyl_m(&p, 8, 0.0, z, Side::Minus).unwrap();
                assert!(mp.im > 0.0 && mm.im < 0.0, "z={z}");
                let conj = weyl_m(&p, 8, 0.0, z.conj(), Side::Plus).unwrap();
                assert!((conj - mp.conj()).norm() < 1e-12 * (1.0 + mp.norm()));
            }
        }
    }
}
