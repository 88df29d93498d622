//! Soliton parameter sequences `{kappa_j}`, `{c_j}`: validation, generation
//! from tail rules, trace-norm tail bounds and truncation selection.
//!
//! Sequences are stored as a finite prefix plus the [`TailRule`] that
//! produced it. Explicit lists describe finitely many solitons; the geometric
//! and reciprocal rules describe infinite sequences whose tails are summed in
//! closed form (or bounded) when a tail quantity is requested.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the sequence continues past the stored prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailRule {
    /// Finitely many entries; nothing past the prefix.
    Explicit,
    /// `kappa_j = base * ratio^(j - 1)`.
    Geometric { ratio: f64, base: f64 },
    /// `kappa_j = scale / j^power`.
    Reciprocal { power: f64, scale: f64 },
}

impl TailRule {
    fn check(&self) -> Result<()> {
        match *self {
            TailRule::Explicit => Ok(()),
            TailRule::Geometric { ratio, base } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    Err(Error::InvalidRule("geometric ratio must lie in (0, 1)"))
                } else if !(base > 0.0 && base.is_finite()) {
                    Err(Error::InvalidRule("geometric base must be positive"))
                } else {
                    Ok(())
                }
            }
            TailRule::Reciprocal { power, scale } => {
                if !(power > 1.0 && power.is_finite()) {
                    Err(Error::InvalidRule("reciprocal power must exceed 1"))
                } else if !(scale > 0.0 && scale.is_finite()) {
                    Err(Error::InvalidRule("reciprocal scale must be positive"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `kappa_j` for the 1-based index `j`, `None` for explicit lists.
    pub fn kappa(&self, j: usize) -> Option<f64> {
        match *self {
            TailRule::Explicit => None,
            TailRule::Geometric { ratio, base } => Some(base * libm::pow(ratio, (j - 1) as f64)),
            TailRule::Reciprocal { power, scale } => Some(scale / libm::pow(j as f64, power)),
        }
    }

    /// Upper bound on `sum_{i >= j} kappa_i` (exact for geometric rules).
    pub fn kappa_tail_sum(&self, j: usize) -> f64 {
        match *self {
            TailRule::Explicit => 0.0,
            TailRule::Geometric { ratio, .. } => self.kappa(j).unwrap_or(0.0) / (1.0 - ratio),
            TailRule::Reciprocal { power, scale } => {
                let jf = j as f64;
                scale / libm::pow(jf, power) + scale * libm::pow(jf, 1.0 - power) / (power - 1.0)
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        !matches!(self, TailRule::Explicit)
    }
}

/// How the norming constants are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormingRule {
    Explicit,
    /// `c_j = kappa_j`, so that `sum c_j^2 / kappa_j = sum kappa_j`.
    MatchKappa,
}

/// Which summability hypotheses hold for a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SummabilityClass {
    Finite,
    /// Bounded `kappa` with summable `c_j^2 / kappa_j`.
    LinfSummable,
    /// Additionally `sum kappa_j < infinity`.
    L1Summable,
}

impl SummabilityClass {
    pub fn from_hypotheses(finite: bool, weights_summable: bool, kappas_summable: bool) -> Option<Self> {
        match (finite, weights_summable, kappas_summable) {
            (true, _, _) => Some(Self::Finite),
            (false, true, true) => Some(Self::L1Summable),
            (false, true, false) => Some(Self::LinfSummable),
            (false, false, _) => None,
        }
    }

    /// Finite sequences and summable ones both satisfy `sum kappa_j < infinity`.
    pub fn has_summable_kappas(self) -> bool {
        matches!(self, Self::Finite | Self::L1Summable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValidationFailure {
    LengthMismatch { kappas: usize, norming: usize },
    NonPositiveKappa { index: usize },
    NonPositiveNorming { index: usize },
    DuplicateKappa { first: usize, second: usize },
    InvalidRule,
    NormingNotSummable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub class: Option<SummabilityClass>,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty() && self.class.is_some()
    }
}

/// Wavenumbers `kappa_j > 0` and norming constants `c_j > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    kappas: Vec<f64>,
    norming: Vec<f64>,
    tail: TailRule,
    norming_rule: NormingRule,
}

impl SolitonParams {
    /// A finite soliton family. Fails unless [`validate`] accepts it.
    pub fn explicit(kappas: Vec<f64>, norming: Vec<f64>) -> Result<Self> {
        let p = Self::unchecked(kappas, norming);
        if validate(&p).is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidParams(
                "kappas must be positive and distinct, norming positive, lengths equal",
            ))
        }
    }

    /// Finite family without validation, for callers that want the report.
    pub fn unchecked(kappas: Vec<f64>, norming: Vec<f64>) -> Self {
        Self {
            kappas,
            norming,
            tail: TailRule::Explicit,
            norming_rule: NormingRule::Explicit,
        }
    }

    /// Finite family with `c_j = kappa_j`.
    pub fn explicit_matched(kappas: Vec<f64>) -> Result<Self> {
        let norming = kappas.clone();
        let mut p = Self::explicit(kappas, norming)?;
        p.norming_rule = NormingRule::MatchKappa;
        Ok(p)
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn norming(&self) -> &[f64] {
        &self.norming
    }

    pub fn tail_rule(&self) -> TailRule {
        self.tail
    }

    pub fn norming_rule(&self) -> NormingRule {
        self.norming_rule
    }

    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }

    pub fn class(&self) -> Option<SummabilityClass> {
        validate(self).class
    }

    /// Regenerates the prefix to hold at least `count` entries. Explicit
    /// families cannot grow.
    pub fn extended(&self, count: usize) -> Result<Self> {
        if count <= self.len() {
            return Ok(self.clone());
        }
        if !self.tail.is_infinite() {
            return Err(Error::OrderExceedsPrefix {
                requested: count,
                available: self.len(),
            });
        }
        generate(self.tail, count)
    }

    /// `sum_{j > n} kappa_j` over the stored prefix and, for infinite rules,
    /// the bound on everything past it.
    pub fn kappa_sum_after(&self, n: usize) -> f64 {
        let stored: f64 = self.kappas.iter().skip(n).sum();
        let rest = if self.tail.is_infinite() {
            self.tail.kappa_tail_sum(self.len().max(n) + 1)
        } else {
            0.0
        };
        stored + rest
    }

    /// Ensures `n` solitons are stored, returning the error callers of the
    /// field routines expect otherwise.
    pub(crate) fn check_order(&self, n: usize) -> Result<()> {
        if n > self.len() {
            Err(Error::OrderExceedsPrefix {
                requested: n,
                available: self.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Checks positivity, distinctness and which summability class applies.
pub fn validate(params: &SolitonParams) -> ValidationReport {
    let mut failures = Vec::new();
    let (nk, nc) = (params.kappas.len(), params.norming.len());
    if nk != nc {
        failures.push(ValidationFailure::LengthMismatch {
            kappas: nk,
            norming: nc,
        });
    }
    for (index, &k) in params.kappas.iter().enumerate() {
        if !(k > 0.0 && k.is_finite()) {
            failures.push(ValidationFailure::NonPositiveKappa { index });
        }
    }
    for (index, &c) in params.norming.iter().enumerate() {
        if !(c > 0.0 && c.is_finite()) {
            failures.push(ValidationFailure::NonPositiveNorming { index });
        }
    }
    let mut order: Vec<usize> = (0..nk).collect();
    order.sort_by(|&a, &b| params.kappas[a].total_cmp(&params.kappas[b]));
    for w in order.windows(2) {
        if params.kappas[w[0]] == params.kappas[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            failures.push(ValidationFailure::DuplicateKappa { first, second });
        }
    }
    if params.tail.check().is_err() {
        failures.push(ValidationFailure::InvalidRule);
    }

    let finite = !params.tail.is_infinite();
    // Every infinite rule we generate has summable kappas; with c = kappa the
    // weights c^2 / kappa are then summable too.
    let kappas_summable = true;
    let weights_summable = finite || params.norming_rule == NormingRule::MatchKappa;
    if !weights_summable {
        failures.push(ValidationFailure::NormingNotSummable);
    }
    let class = SummabilityClass::from_hypotheses(finite, weights_summable, kappas_summable);
    ValidationReport { class, failures }
}

/// Deterministic sequence from a rule, with `c_j = kappa_j`.
pub fn generate(rule: TailRule, count: usize) -> Result<SolitonParams> {
    if !rule.is_infinite() {
        return Err(Error::InvalidRule("explicit rules carry their own data"));
    }
    rule.check()?;
    let kappas: Vec<f64> = (1..=count).map(|j| rule.kappa(j).unwrap_or(0.0)).collect();
    Ok(SolitonParams {
        norming: kappas.clone(),
        kappas,
        tail: rule,
        norming_rule: NormingRule::MatchKappa,
    })
}

/// A `(t, x)` rectangle; either side of the x-range may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Window {
    pub fn point(t: f64, x: f64) -> Self {
        Self {
            t_min: t,
            t_max: t,
            x_min: x,
            x_max: x,
        }
    }

    /// The corner where every term `e^{8 kappa^3 t - 2 kappa x}` is largest.
    pub fn worst_corner(&self) -> (f64, f64) {
        (self.t_max, self.x_min)
    }
}

fn trace_term(kappa: f64, c: f64, t: f64, x: f64) -> f64 {
    c * c / (2.0 * kappa) * libm::exp(8.0 * kappa * kappa * kappa * t - 2.0 * kappa * x)
}

/// Bound on the trace norm of the part of `C(t, x)` indexed by
/// `j >= from_index` (1-based). `C` is positive semidefinite, so its trace
/// norm equals its trace `sum c_j^2 / (2 kappa_j) e^{8 kappa_j^3 t - 2 kappa_j x}`.
pub fn tail_trace_bound(params: &SolitonParams, from_index: usize, t: f64, x: f64) -> Result<f64> {
    let from = from_index.max(1);
    let stored: f64 = params
        .kappas
        .iter()
        .zip(&params.norming)
        .skip(from - 1)
        .map(|(&k, &c)| trace_term(k, c, t, x))
        .sum();
    let rule = params.tail;
    if !rule.is_infinite() {
        return Ok(stored);
    }
    if params.norming_rule != NormingRule::MatchKappa {
        return Err(Error::ClassMismatch("tail of an infinite rule needs c = kappa"));
    }
    // Terms past the prefix: kappa_j <= kappa_J, so each exponential factor is
    // at most exp(8 kappa_J^3 t^+ + 2 kappa_J x^-) and the weights sum to
    // kappa_tail_sum / 2.
    let first = from.max(params.len() + 1);
    let kj = rule.kappa(first).unwrap_or(0.0);
    let factor = libm::exp(8.0 * kj * kj * kj * t.max(0.0) + 2.0 * kj * (-x).max(0.0));
    let tail = 0.5 * factor * rule.kappa_tail_sum(first);
    let total = stored + tail;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NoTruncation { eps: total })
    }
}

const MAX_TRUNCATION: usize = 1 << 16;

/// Smallest `N` whose tail bound at the worst corner of `window` is `<= eps`.
/// For infinite rules the result may exceed the stored prefix; use
/// [`SolitonParams::extended`] to materialize it.
pub fn choose_n(params: &SolitonParams, eps: f64, window: &Window) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::NoTruncation { eps });
    }
    let (t, x) = window.worst_corner();
    let limit = if params.tail.is_infinite() {
        MAX_TRUNCATION
    } else {
        params.len()
    };
    for n in 0..=limit {
        if tail_trace_bound(params, n + 1, t, x)? <= eps {
            return Ok(n);
        }
    }
    Err(Error::NoTruncation { eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::SQRT_2;
    use proptest::prelude::*;

    fn halving(count: usize) -> SolitonParams {
        generate(TailRule::Geometric { ratio: 0.5, base: 0.5 }, count).unwrap()
    }

    #[test]
    fn single_soliton_is_finite() {
        let p = SolitonParams::unchecked(vec![1.0], vec![SQRT_2]);
        let r = validate(&p);
        assert!(r.is_valid());
        assert_eq!(r.class, Some(SummabilityClass::Finite));
    }

    #[test]
    fn duplicate_kappa_rejected() {
        let p = SolitonParams::unchecked(vec![1.0, 1.0], vec![1.0, 1.0]);
        let r = validate(&p);
        assert!(!r.is_valid());
        assert!(r
            .failures
            .contains(&ValidationFailure::DuplicateKappa { first: 0, second: 1 }));
        assert!(SolitonParams::explicit(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn nonpositive_entries_rejected() {
        let r = validate(&SolitonParams::unchecked(vec![1.0, -0.5], vec![1.0, 0.0]));
        assert!(r.failures.contains(&ValidationFailure::NonPositiveKappa { index: 1 }));
        assert!(r.failures.contains(&ValidationFailure::NonPositiveNorming { index: 1 }));
        let r = validate(&SolitonParams::unchecked(vec![1.0], vec![]));
        assert!(!r.is_valid());
    }

    #[test]
    fn halving_sequence_is_l1() {
        let p = halving(64);
        let r = validate(&p);
        assert!(r.is_valid());
        assert_eq!(r.class, Some(SummabilityClass::L1Summable));
        // sum c^2 / kappa = sum 2^{-j} < 1
        let s: f64 = p.kappas().iter().zip(p.norming()).map(|(k, c)| c * c / k).sum();
        assert!(s <= 1.0);
    }

    #[test]
    fn generators() {
        let p = generate(TailRule::Geometric { ratio: 0.5, base: 1.0 }, 3).unwrap();
        assert_eq!(p.kappas(), &[1.0, 0.5, 0.25]);
        assert_eq!(p.norming(), p.kappas());
        assert!(generate(TailRule::Geometric { ratio: 0.5, base: 1.0 }, 0)
            .unwrap()
            .is_empty());
        let p = generate(TailRule::Reciprocal { power: 2.0, scale: 1.0 }, 3).unwrap();
        assert_relative_eq!(p.kappas()[1], 0.25);
        assert_relative_eq!(p.kappas()[2], 1.0 / 9.0);
        assert!(generate(TailRule::Geometric { ratio: 1.5, base: 1.0 }, 3).is_err());
        assert!(generate(TailRule::Reciprocal { power: 1.0, scale: 1.0 }, 3).is_err());
        assert!(generate(TailRule::Explicit, 3).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        let one = SolitonParams::explicit(vec![1.0], vec![SQRT_2]).unwrap();
        assert_eq!(tail_trace_bound(&one, 2, 0.0, 0.0).unwrap(), 0.0);
        // sum_j 2^{-j-1} = 1/2
        let p = halving(64);
        assert_relative_eq!(tail_trace_bound(&p, 1, 0.0, 0.0).unwrap(), 0.5, max_relative = 1e-15);
        // the closed-form tail past the prefix reproduces the same value
        let short = halving(3);
        assert_relative_eq!(
            tail_trace_bound(&short, 1, 0.0, 0.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        let mut last = f64::INFINITY;
        for x in [0.0, 1.0, 5.0, 20.0, 100.0, 1000.0] {
            let b = tail_trace_bound(&p, 1, 0.0, x).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn choose_n_examples() {
        let p = halving(64);
        let right_half = Window {
            t_min: 0.0,
            t_max: 0.0,
            x_min: 0.0,
            x_max: f64::INFINITY,
        };
        assert_eq!(choose_n(&p, 1.0, &right_half).unwrap(), 0);
        // tail from j = 10 equals 2^{-10}
        assert_eq!(choose_n(&p, libm::ldexp(1.0, -10), &right_half).unwrap(), 9);
        assert!(choose_n(&p, 0.0, &right_half).is_err());
        let one = SolitonParams::explicit(vec![1.0], vec![SQRT_2]).unwrap();
        assert_eq!(choose_n(&one, 1e-300, &Window::point(0.0, 0.0)).unwrap(), 1);
    }

    #[test]
    fn extension_regenerates_from_rule() {
        let p = halving(4).extended(10).unwrap();
        assert_eq!(p.len(), 10);
        assert_relative_eq!(p.kappas()[9], libm::ldexp(1.0, -10));
        assert!(SolitonParams::explicit(vec![1.0], vec![1.0])
            .unwrap()
            .extended(2)
            .is_err());
    }

    #[test]
    fn class_from_hypotheses() {
        use SummabilityClass::*;
        assert_eq!(
            SummabilityClass::from_hypotheses(false, true, false),
            Some(LinfSummable)
        );
        assert_eq!(SummabilityClass::from_hypotheses(false, false, true), None);
        assert!(!LinfSummable.has_summable_kappas());
        assert!(Finite.has_summable_kappas());
    }

    proptest! {
        #[test]
        fn generated_sequences_validate(ratio in 0.05f64..0.95, base in 0.01f64..4.0, count in 0usize..80) {
            let p = generate(TailRule::Geometric { ratio, base }, count).unwrap();
            prop_assert!(validate(&p).is_valid());
            prop_assert_eq!(&p, &generate(TailRule::Geometric { ratio, base }, count).unwrap());
        }

        #[test]
        fn reciprocal_sequences_validate(power in 1.05f64..4.0, scale in 0.01f64..4.0, count in 0usize..80) {
            let p = generate(TailRule::Reciprocal { power, scale }, count).unwrap();
            prop_assert!(validate(&p).is_valid());
        }

        #[test]
        fn tail_bound_monotone(from in 1usize..40, t in 0.0f64..1.0, x in -3.0f64..10.0, dt in 0.0f64..0.5, dx in 0.0f64..3.0) {
            let p = halving(24);
            let b = tail_trace_bound(&p, from, t, x).unwrap();
            prop_assert!(tail_trace_bound(&p, from + 1, t, x).unwrap() <= b);
            prop_assert!(tail_trace_bound(&p, from, t, x + dx).unwrap() <= b);
            prop_assert!(tail_trace_bound(&p, from, t + dt, x).unwrap() >= b);
        }

        #[test]
        fn choose_n_monotone_in_eps(e1 in -30.0f64..0.0, shrink in 0.0f64..10.0) {
            let p = halving(16);
            let w = Window { t_min: 0.0, t_max: 0.5, x_min: -5.0, x_max: 5.0 };
            let big = libm::exp2(e1);
            let small = big * libm::exp2(-shrink);
            prop_assert!(choose_n(&p, small, &w).unwrap() >= choose_n(&p, big, &w).unwrap());
        }
    }
}
