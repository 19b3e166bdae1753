//! Seeded randomized property suites with counterexample shrinking.
//!
//! Every check draws its cases from its own ChaCha stream derived from the
//! seed and the check name, so a suite's results do not depend on which other
//! suites were selected. A failing case is shrunk greedily and dumped as JSON.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fragmentation::{make_cantor_fragments, make_faa, Fragmentation};
use crate::functions::{
    lambda, lambda_limit, value_ratio, value_ratio_limit, AdmissibleFunction, Pwa, PwaTail,
};
use crate::halfline::{
    chain_certify, envelopes_for, image_prefix_for_horizon, stratum_refute, sum_coverage_upto,
    ChainParams, CoverageKind, Verdict,
};
use crate::interval::{Interval, IntervalUnion};
use crate::numeric::DEFAULT_BITS;
use crate::rational::{format_rational, int, ratio, Extended, Rational};
use crate::thickness::{
    gap_lemma_applies, longest_gap_bound, tau, tau_bruteforce, tau_for_presentation,
    GapPresentation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thickness,
    GapLemma,
    LambdaCalculus,
    Transfer,
    Soundness,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Thickness,
        Suite::GapLemma,
        Suite::LambdaCalculus,
        Suite::Transfer,
        Suite::Soundness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thickness => "thickness",
            Suite::GapLemma => "gap_lemma",
            Suite::LambdaCalculus => "lambda_calculus",
            Suite::Transfer => "transfer",
            Suite::Soundness => "soundness",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.trim().replace('-', "_"))
            .ok_or_else(|| Error::Domain(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Cases per check; the soundness suite runs a twentieth of this (at least 5).
    pub cases: usize,
    pub suites: Vec<Suite>,
    /// Replace the thickness routine under test with a broken one, to exercise
    /// failure reporting. Affects the thickness suite only.
    pub inject_fault: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            cases: 200,
            suites: Suite::ALL.to_vec(),
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub case_index: usize,
    pub message: String,
    pub shrink_steps: usize,
    pub input: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub property: String,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    pub discarded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| c.failed > 0)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for c in &self.checks {
            let status = if c.failed == 0 { "pass" } else { "FAIL" };
            writeln!(
                f,
                "{status} {}/{}: {} passed, {} failed, {} discarded",
                c.suite, c.property, c.passed, c.failed, c.discarded
            )?;
        }
        let total: usize = self.checks.iter().map(|c| c.passed).sum();
        let failed = self.checks.iter().filter(|c| c.failed > 0).count();
        write!(
            f,
            "{} checks, {total} cases passed, {failed} checks failed",
            self.checks.len()
        )
    }
}

/// Result of one property evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail(String),
    /// The case does not meet the property's hypotheses.
    Discard,
}

impl Outcome {
    fn check(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail(msg())
        }
    }
}

fn outcome(r: Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| Outcome::Fail(format!("error: {e}")))
}

/// A generated input that can be shrunk and dumped.
pub trait Case: Clone {
    fn shrink(&self) -> Vec<Self>;
    fn dump(&self) -> Value;
}

impl Case for Rational {
    fn shrink(&self) -> Vec<Self> {
        let mut out: Vec<Rational> = [self.floor(), self.ceil()]
            .into_iter()
            .filter(|q| q != self)
            .collect();
        out.dedup();
        out
    }

    fn dump(&self) -> Value {
        Value::String(format_rational(self))
    }
}

impl Case for IntervalUnion {
    fn shrink(&self) -> Vec<Self> {
        let parts = self.parts();
        if parts.len() < 2 {
            return vec![];
        }
        (0..parts.len())
            .map(|i| {
                let mut p = parts.to_vec();
                p.remove(i);
                IntervalUnion::from_canonical(p).expect("subset of canonical parts")
            })
            .collect()
    }

    fn dump(&self) -> Value {
        serde_json::to_value(self).expect("interval unions serialize")
    }
}

impl Case for Pwa {
    fn shrink(&self) -> Vec<Self> {
        let pts = self.points();
        let from = match self.tail() {
            PwaTail::Periodic { from_index } => Some(*from_index),
            _ => None,
        };
        (1..pts.len().saturating_sub(1))
            .filter(|&i| Some(i) != from)
            .filter_map(|i| {
                let mut p = pts.to_vec();
                p.remove(i);
                let tail = match (self.tail(), from) {
                    (PwaTail::Periodic { .. }, Some(f)) => PwaTail::Periodic {
                        from_index: if i < f { f - 1 } else { f },
                    },
                    (t, _) => t.clone(),
                };
                Pwa::new(p, tail).ok()
            })
            .collect()
    }

    fn dump(&self) -> Value {
        serde_json::to_value(AdmissibleFunction::PiecewiseAffine(self.clone()))
            .expect("functions serialize")
    }
}

macro_rules! tuple_case {
    ($($t:ident $i:tt),+) => {
        impl<$($t: Case),+> Case for ($($t,)+) {
            fn shrink(&self) -> Vec<Self> {
                let mut out = Vec::new();
                $(
                    for s in self.$i.shrink() {
                        let mut c = self.clone();
                        c.$i = s;
                        out.push(c);
                    }
                )+
                out
            }

            fn dump(&self) -> Value {
                Value::Array(vec![$(self.$i.dump()),+])
            }
        }
    };
}

tuple_case!(A 0, B 1);
tuple_case!(A 0, B 1, C 2);
tuple_case!(A 0, B 1, C 2, D 3);
tuple_case!(A 0, B 1, C 2, D 3, E 4);

/// Repeatedly replaces a failing case by its first failing shrink candidate.
pub fn shrink_failure<C: Case>(
    mut case: C,
    mut prop: impl FnMut(&C) -> Outcome,
) -> (C, String, usize) {
    let mut msg = match prop(&case) {
        Outcome::Fail(m) => m,
        _ => String::new(),
    };
    let mut steps = 0;
    'outer: loop {
        for cand in case.shrink() {
            if let Outcome::Fail(m) = prop(&cand) {
                case = cand;
                msg = m;
                steps += 1;
                continue 'outer;
            }
        }
        return (case, msg, steps);
    }
}

/// A stream seeded from `seed` and `label` only.
pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label keeps streams stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

/// Runs `prop` on `cases` generated inputs and shrinks the first failure.
pub fn run_check<C: Case>(
    suite: Suite,
    property: &str,
    seed: u64,
    cases: usize,
    mut gen: impl FnMut(&mut ChaCha8Rng) -> C,
    mut prop: impl FnMut(&C) -> Outcome,
) -> CheckReport {
    let mut rng = stream(seed, &format!("{suite}/{property}"));
    let mut report = CheckReport {
        suite,
        property: property.to_string(),
        cases,
        passed: 0,
        failed: 0,
        discarded: 0,
        counterexample: None,
    };
    for i in 0..cases {
        let case = gen(&mut rng);
        match prop(&case) {
            Outcome::Pass => report.passed += 1,
            Outcome::Discard => report.discarded += 1,
            Outcome::Fail(_) => {
                report.failed += 1;
                if report.counterexample.is_none() {
                    let (small, message, shrink_steps) = shrink_failure(case, &mut prop);
                    report.counterexample = Some(Counterexample {
                        case_index: i,
                        message,
                        shrink_steps,
                        input: small.dump(),
                    });
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Generators

/// `p/q` with `q <= max_den` and `lo <= p/q <= hi`.
pub fn random_rational(rng: &mut impl Rng, lo: i64, hi: i64, max_den: i64) -> Rational {
    let q = rng.gen_range(1..=max_den.max(1));
    ratio(rng.gen_range(lo * q..=hi * q), q)
}

/// Positive `p/q` with `q <= max_den` and `0 < p/q <= hi`.
pub fn random_positive(rng: &mut impl Rng, hi: i64, max_den: i64) -> Rational {
    let q = rng.gen_range(1..=max_den.max(1));
    ratio(rng.gen_range(1..=hi * q), q)
}

/// A union in `[0, 4]` with at most `max_gaps` gaps and endpoint
/// denominators at most `max_den`. About one part in eight is a point.
pub fn random_union(rng: &mut impl Rng, max_gaps: usize, max_den: i64) -> IntervalUnion {
    let parts = rng.gen_range(1..=max_gaps + 1);
    let available = 4 * max_den as usize + 1;
    let want = (2 * parts).min(available);
    let mut ends = BTreeSet::new();
    while ends.len() < want {
        ends.insert(random_rational(rng, 0, 4, max_den));
    }
    let ends: Vec<Rational> = ends.into_iter().collect();
    let mut out = Vec::with_capacity(want / 2);
    for w in ends.chunks_exact(2) {
        let hi = if rng.gen_ratio(1, 8) {
            w[0].clone()
        } else {
            w[1].clone()
        };
        out.push(Interval::new(w[0].clone(), hi).expect("sorted"));
    }
    IntervalUnion::from_canonical(out).expect("strictly increasing endpoints")
}

/// [`random_union`] mapped affinely onto `[lo, lo + width]`.
pub fn random_union_in(
    rng: &mut impl Rng,
    lo: &Rational,
    width: &Rational,
    max_gaps: usize,
    max_den: i64,
) -> IntervalUnion {
    let k = random_union(rng, max_gaps, max_den);
    let k = k.translate(&-k.min().clone());
    let d = k.diam();
    if d.is_zero() {
        return k.translate(lo);
    }
    k.affine(&(width / d), lo).expect("positive scale")
}

/// Middle-`α` Cantor approximant with `α <= 1/3`, scaled and shifted; its
/// thickness is `(1 − α) / (2α) >= 1`.
pub fn random_thick_union(rng: &mut impl Rng) -> IntervalUnion {
    let alpha = ratio(1, rng.gen_range(3..=12));
    let depth = rng.gen_range(1..=3);
    let length = random_positive(rng, 3, 4);
    let k = crate::fragmentation::middle_alpha_cantor(&length, &alpha, depth);
    k.translate(&random_rational(rng, 0, 3, 4))
}

/// Tail shape for [`random_pwa`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TailShape {
    FinalSlope,
    /// Repeating pattern of the given width.
    Periodic(Rational),
}

/// A strictly increasing piecewise-affine function with up to `max_pieces`
/// pieces before the tail. Slopes lie in `[1/8, 8]`.
pub fn random_pwa(rng: &mut impl Rng, max_pieces: usize, tail: &TailShape) -> Pwa {
    let slope = |rng: &mut _| random_positive(rng, 8, 8).max(ratio(1, 8));
    let mut x = Rational::zero();
    let mut y = random_rational(rng, 0, 2, 4);
    let mut points = vec![(x.clone(), y.clone())];
    let prefix = match tail {
        TailShape::FinalSlope => rng.gen_range(1..=max_pieces.max(1)),
        TailShape::Periodic(_) => rng.gen_range(0..=max_pieces.min(2)),
    };
    for _ in 0..prefix {
        let w = random_positive(rng, 2, 4);
        let s = slope(rng);
        x += &w;
        y += w * s;
        points.push((x.clone(), y.clone()));
    }
    let shape = match tail {
        TailShape::FinalSlope => PwaTail::FinalSlope(slope(rng)),
        TailShape::Periodic(width) => {
            let from_index = points.len() - 1;
            let pieces = rng.gen_range(1..=3usize);
            let mut cuts = BTreeSet::new();
            for _ in 1..pieces {
                let t = ratio(rng.gen_range(1..8), 8);
                cuts.insert(width * t);
            }
            cuts.insert(width.clone());
            let start = x.clone();
            let mut prev = Rational::zero();
            for c in cuts {
                let s = slope(rng);
                y += (&c - &prev) * s;
                x = &start + &c;
                points.push((x.clone(), y.clone()));
                prev = c;
            }
            PwaTail::Periodic { from_index }
        }
    };
    Pwa::new(points, shape).expect("generated data is strictly increasing")
}

fn random_tail(rng: &mut impl Rng) -> TailShape {
    if rng.gen_bool(0.5) {
        TailShape::FinalSlope
    } else {
        TailShape::Periodic(random_positive(rng, 2, 2))
    }
}

// ---------------------------------------------------------------------------
// Exact helpers for piecewise-affine functions

fn pwa_fn(p: &Pwa) -> AdmissibleFunction {
    AdmissibleFunction::PiecewiseAffine(p.clone())
}

/// `Λ(g, γ, M)`; exact for piecewise-affine data with a declared tail.
pub fn pwa_lambda(p: &Pwa, gamma: &Rational, m: &Rational) -> Result<Extended> {
    let est = lambda(&pwa_fn(p), gamma, m, DEFAULT_BITS)?;
    if !est.exact {
        return Err(Error::Refused(
            "piecewise-affine relative variation should be exact".into(),
        ));
    }
    Ok(est.upper)
}

/// A point of `[m, m + width]` on a grid of sixteenths.
fn within(m: &Rational, width: &Rational, rng: &mut impl Rng) -> Rational {
    m + width * ratio(rng.gen_range(0..=16), 16)
}

fn ext(q: Rational) -> Extended {
    Extended::Finite(q)
}

fn show(e: &Extended) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Suites

fn faulty_tau(k: &IntervalUnion) -> Extended {
    // Shortest gaps first: the wrong presentation.
    let mut order = GapPresentation::canonical(k).order().to_vec();
    order.reverse();
    tau_for_presentation(k, &GapPresentation::new(k, order).expect("permutation"))
}

fn thickness_suite(cfg: &SelftestConfig) -> Vec<CheckReport> {
    let n = cfg.cases;
    let fault = cfg.inject_fault;
    vec![
        run_check(
            Suite::Thickness,
            "tau_matches_bruteforce",
            cfg.seed,
            n,
            |rng| random_union(rng, 6, 32),
            |k: &IntervalUnion| {
                outcome((|| {
                    let fast = if fault { faulty_tau(k) } else { tau(k) };
                    let slow = tau_bruteforce(k)?;
                    Ok(Outcome::check(fast == slow, || {
                        format!("tau = {fast} but brute force gives {slow}")
                    }))
                })())
            },
        ),
        run_check(
            Suite::Thickness,
            "tau_affine_invariant",
            cfg.seed,
            n,
            |rng| {
                (
                    random_union(rng, 5, 16),
                    random_positive(rng, 9, 7),
                    random_rational(rng, -5, 5, 9),
                )
            },
            |(k, c, d): &(IntervalUnion, Rational, Rational)| {
                outcome((|| {
                    let moved = k.affine(c, d)?;
                    Ok(Outcome::check(tau(&moved) == tau(k), || {
                        format!("tau {} became {}", tau(k), tau(&moved))
                    }))
                })())
            },
        ),
    ]
}

fn gap_lemma_suite(cfg: &SelftestConfig) -> Vec<CheckReport> {
    vec![
        run_check(
            Suite::GapLemma,
            "sum_is_hull_sum",
            cfg.seed,
            cfg.cases,
            gap_lemma_pair,
            |(k, k2): &(IntervalUnion, IntervalUnion)| {
                if !gap_lemma_applies(k, k2) {
                    return Outcome::Discard;
                }
                let sum = k.minkowski_sum(k2);
                let hull = IntervalUnion::interval(k.hull().add(&k2.hull()));
                Outcome::check(sum == hull, || {
                    format!(
                        "sum has {} parts, first gap {:?}",
                        sum.parts().len(),
                        sum.gaps().first()
                    )
                })
            },
        ),
        run_check(
            Suite::GapLemma,
            "sum_matches_pairwise_definition",
            cfg.seed,
            cfg.cases,
            |rng| (random_union(rng, 3, 8), random_union(rng, 3, 8)),
            |(k, k2): &(IntervalUnion, IntervalUnion)| {
                let sum = k.minkowski_sum(k2);
                let ok = k
                    .parts()
                    .iter()
                    .all(|p| k2.parts().iter().all(|q| sum.covers_interval(&p.add(q))))
                    && sum.parts().iter().all(|s| {
                        k.parts()
                            .iter()
                            .any(|p| k2.parts().iter().any(|q| p.add(q).lo() == s.lo()))
                    });
                Outcome::check(ok, || {
                    "sum differs from the union of pairwise interval sums".into()
                })
            },
        ),
    ]
}

/// A pair of sets whose hulls interleave, biased towards thick sets so the
/// gap lemma usually applies. Retries until it does (bounded).
pub fn gap_lemma_pair(rng: &mut ChaCha8Rng) -> (IntervalUnion, IntervalUnion) {
    let mut last = None;
    for _ in 0..64 {
        let k = if rng.gen_bool(0.8) {
            random_thick_union(rng)
        } else {
            random_union(rng, 3, 8)
        };
        let k2 = if rng.gen_bool(0.8) {
            random_thick_union(rng)
        } else {
            random_union(rng, 3, 8)
        };
        // Slide k2 so that the hulls overlap.
        let span = k.diam() + k2.diam();
        let t = ratio(rng.gen_range(0..=32), 32);
        let shift = k.min() - k2.max() + span * t;
        let k2 = k2.translate(&shift);
        if gap_lemma_applies(&k, &k2) {
            return (k, k2);
        }
        last = Some((k, k2));
    }
    last.expect("at least one attempt")
}

fn lambda_calculus_suite(cfg: &SelftestConfig) -> Vec<CheckReport> {
    let (seed, n) = (cfg.seed, cfg.cases);
    let s = Suite::LambdaCalculus;
    vec![
        run_check(
            s,
            "mean_value_bounds",
            seed,
            n,
            gen_pwa_window,
            |(p, a, w): &(Pwa, Rational, Rational)| {
                outcome((|| {
                    if !w.is_positive() || a.is_negative() {
                        return Ok(Outcome::Discard);
                    }
                    let b = a + w;
                    let secant = (p.eval(&b)? - p.eval(a)?) / w;
                    let (lo, hi) = p.slope_range(a, &b)?;
                    Ok(Outcome::check(lo <= secant && secant <= hi, || {
                        format!(
                            "secant {} outside [{}, {}]",
                            format_rational(&secant),
                            format_rational(&lo),
                            format_rational(&hi)
                        )
                    }))
                })())
            },
        ),
        run_check(
            s,
            "increment_ratio_bound",
            seed,
            n,
            |rng| {
                let (p, m, g) = gen_pwa_window(rng);
                let pts: Vec<Rational> = (0..4).map(|_| within(&m, &g, rng)).collect();
                (
                    p,
                    m,
                    g,
                    (pts[0].clone(), pts[1].clone()),
                    (pts[2].clone(), pts[3].clone()),
                )
            },
            |(p, m, g, ab, cd): &(
                Pwa,
                Rational,
                Rational,
                (Rational, Rational),
                (Rational, Rational),
            )| {
                outcome((|| {
                    let (a, b) = (
                        ab.0.clone().min(ab.1.clone()),
                        ab.0.clone().max(ab.1.clone()),
                    );
                    let (c, d) = (
                        cd.0.clone().min(cd.1.clone()),
                        cd.0.clone().max(cd.1.clone()),
                    );
                    if a == b || c == d || !g.is_positive() || m.is_negative() {
                        return Ok(Outcome::Discard);
                    }
                    let hull = a.clone().max(d.clone()).max(b.clone()) - a.clone().min(c.clone());
                    if &hull > g || &a.clone().min(c.clone()) < m {
                        return Ok(Outcome::Discard);
                    }
                    let Extended::Finite(lam) = pwa_lambda(p, g, m)? else {
                        return Ok(Outcome::Discard);
                    };
                    let lhs = (p.eval(&d)? - p.eval(&c)?) / (p.eval(&b)? - p.eval(&a)?);
                    let rhs = (&d - &c) / (&b - &a) / &lam;
                    Ok(Outcome::check(lhs >= rhs, || {
                        format!("{} < {}", format_rational(&lhs), format_rational(&rhs))
                    }))
                })())
            },
        ),
        run_check(
            s,
            "submultiplicative",
            seed,
            n,
            |rng| {
                let p = {
                    let t = random_tail(rng);
                    random_pwa(rng, 4, &t)
                };
                (
                    p,
                    random_positive(rng, 2, 4),
                    random_positive(rng, 2, 4),
                    random_rational(rng, 0, 6, 4),
                )
            },
            |(p, g1, g2, m): &(Pwa, Rational, Rational, Rational)| {
                outcome((|| {
                    if !g1.is_positive() || !g2.is_positive() || m.is_negative() {
                        return Ok(Outcome::Discard);
                    }
                    let whole = pwa_lambda(p, &(g1 + g2), m)?;
                    let bound = pwa_lambda(p, g1, m)?.mul(&pwa_lambda(p, g2, m)?);
                    Ok(Outcome::check(whole <= bound, || {
                        format!("{} > {}", show(&whole), show(&bound))
                    }))
                })())
            },
        ),
        run_check(
            s,
            "sum_bound",
            seed,
            n,
            |rng| {
                let tail = random_tail(rng);
                (
                    random_pwa(rng, 4, &tail),
                    random_pwa(rng, 4, &tail),
                    random_positive(rng, 3, 4),
                    random_rational(rng, 0, 6, 4),
                )
            },
            |(p, q, g, m): &(Pwa, Pwa, Rational, Rational)| {
                outcome((|| {
                    if !g.is_positive() || m.is_negative() {
                        return Ok(Outcome::Discard);
                    }
                    let Ok(sum) = p.add(q) else {
                        return Ok(Outcome::Discard);
                    };
                    let lhs = pwa_lambda(&sum, g, m)?;
                    let rhs = pwa_lambda(p, g, m)?.max(pwa_lambda(q, g, m)?);
                    Ok(Outcome::check(lhs <= rhs, || {
                        format!("{} > {}", show(&lhs), show(&rhs))
                    }))
                })())
            },
        ),
        run_check(
            s,
            "value_ratio_bound",
            seed,
            n,
            |rng| {
                let p = {
                    let t = random_tail(rng);
                    random_pwa(rng, 4, &t)
                };
                (p, random_positive(rng, 2, 4), random_rational(rng, 0, 6, 4))
            },
            |(p, g, m): &(Pwa, Rational, Rational)| {
                outcome((|| {
                    if !g.is_positive() || m.is_negative() {
                        return Ok(Outcome::Discard);
                    }
                    let f = pwa_fn(p);
                    let twice = g * int(2);
                    let ratio_lim = value_ratio_limit(&f, g);
                    let lam2_lim = lambda_limit(&f, &twice, DEFAULT_BITS)?;
                    let lam_lim = lambda_limit(&f, g, DEFAULT_BITS)?.upper;
                    if !ratio_lim.le_lower(&lam2_lim) || lam2_lim.upper > lam_lim.mul(&lam_lim) {
                        return Ok(Outcome::Fail(format!(
                            "limits: value ratio {}, Lambda(2g) {}, Lambda(g)^2 {}",
                            show(&ratio_lim),
                            show(&lam2_lim.upper),
                            show(&lam_lim.mul(&lam_lim))
                        )));
                    }
                    let lam2 = pwa_lambda(p, &twice, m)?;
                    let lam = pwa_lambda(p, g, m)?;
                    Ok(Outcome::check(lam2 <= lam.mul(&lam), || {
                        format!("Lambda(2g, M) = {} > {}", show(&lam2), show(&lam.mul(&lam)))
                    }))
                })())
            },
        ),
        run_check(
            s,
            "product_bound",
            seed,
            n,
            gen_product_case,
            |c: &(Pwa, Pwa, Rational, Rational, Rational)| outcome(product_bound(c)),
        ),
    ]
}

fn gen_pwa_window(rng: &mut ChaCha8Rng) -> (Pwa, Rational, Rational) {
    let p = {
        let t = random_tail(rng);
        random_pwa(rng, 5, &t)
    };
    (p, random_rational(rng, 0, 8, 8), random_positive(rng, 3, 8))
}

fn gen_product_case(rng: &mut ChaCha8Rng) -> (Pwa, Pwa, Rational, Rational, Rational) {
    let tail = random_tail(rng);
    let p = random_pwa(rng, 3, &tail);
    let q = {
        let t = random_tail(rng);
        random_pwa(rng, 3, &t)
    };
    let m = random_rational(rng, 0, 6, 4);
    let g = random_positive(rng, 2, 4);
    let x = within(&m, &(&g * int(4)), rng);
    (p, q, m, g, x)
}

/// Finite-window form of the product rule bound: for `x, y >= M` with
/// `|x − y| <= γ`, `D⁺(gh, x) / D⁻(gh, y) <= max(ρ_g Λ_h, Λ_g ρ_h)` where `ρ`
/// is the value ratio on the window; and the limit form
/// `Λ(gh, γ) <= Λ_g Λ_h max(Λ_g, Λ_h)`.
fn product_bound((p, q, m, g, x): &(Pwa, Pwa, Rational, Rational, Rational)) -> Result<Outcome> {
    if !g.is_positive() || m.is_negative() || x < m {
        return Ok(Outcome::Discard);
    }
    let (fp, fq) = (pwa_fn(p), pwa_fn(q));
    let lp = pwa_lambda(p, g, m)?;
    let lq = pwa_lambda(q, g, m)?;
    let rp = value_ratio(&fp, g, m)?;
    let rq = value_ratio(&fq, g, m)?;
    let bound = rp.mul(&lq).max(lp.mul(&rq));
    let one_sided = |z: &Rational| -> Result<(Rational, Rational)> {
        let (pv, qv) = (p.eval(z)?, q.eval(z)?);
        let (pl, pr) = p.slopes_at(z)?;
        let (ql, qr) = q.slopes_at(z)?;
        let right = &pv * &qr + &qv * &pr;
        let left = match (pl, ql) {
            (Some(pl), Some(ql)) => &pv * ql + &qv * pl,
            _ => right.clone(),
        };
        Ok((left.clone().min(right.clone()), left.max(right)))
    };
    let mut ys = vec![x.clone(), x + g, (x - g).max(m.clone())];
    let stop = x + g;
    ys.extend(
        p.breakpoints_until(&stop)
            .into_iter()
            .chain(q.breakpoints_until(&stop))
            .filter(|b| b >= m && (b - x).abs() <= *g),
    );
    let (_, dplus) = one_sided(x)?;
    for y in &ys {
        let (dminus, _) = one_sided(y)?;
        if dminus.is_zero() {
            continue;
        }
        let r = ext(&dplus / &dminus);
        if r > bound {
            return Ok(Outcome::Fail(format!(
                "ratio {} at y = {} exceeds {}",
                show(&r),
                format_rational(y),
                show(&bound)
            )));
        }
    }
    let lim = lambda_limit(
        &AdmissibleFunction::product(fp.clone(), fq.clone()),
        g,
        DEFAULT_BITS,
    )?
    .upper;
    let lgp = lambda_limit(&fp, g, DEFAULT_BITS)?.upper;
    let lgq = lambda_limit(&fq, g, DEFAULT_BITS)?.upper;
    let limit_bound = lgp.mul(&lgq).mul(&lgp.clone().max(lgq.clone()));
    Ok(Outcome::check(lim <= limit_bound, || {
        format!("limit {} exceeds {}", show(&lim), show(&limit_bound))
    }))
}

trait LeLower {
    fn le_lower(&self, est: &crate::functions::LambdaEstimate) -> bool;
}

impl LeLower for Extended {
    fn le_lower(&self, est: &crate::functions::LambdaEstimate) -> bool {
        self <= &est.lower
    }
}

fn transfer_suite(cfg: &SelftestConfig) -> Vec<CheckReport> {
    vec![
        run_check(
            Suite::Transfer,
            "thickness_transfer",
            cfg.seed,
            cfg.cases,
            transfer_case,
            |(p, k, g, m): &(Pwa, IntervalUnion, Rational, Rational)| {
                outcome(transfer_holds(p, k, g, m))
            },
        ),
        run_check(
            Suite::Transfer,
            "longest_gap_bound",
            cfg.seed,
            cfg.cases,
            |rng| (random_union(rng, 5, 16), ratio(rng.gen_range(0..16), 16)),
            |(k, t): &(IntervalUnion, Rational)| {
                outcome((|| {
                    let Extended::Finite(th) = tau(k) else {
                        return Ok(Outcome::Discard);
                    };
                    let beta = th * t;
                    if !tau(k).gt_rational(&beta) {
                        return Ok(Outcome::Discard);
                    }
                    Ok(Outcome::check(longest_gap_bound(k, &beta)?, || {
                        format!("gap bound fails at beta = {}", format_rational(&beta))
                    }))
                })())
            },
        ),
    ]
}

/// Random `(g, K, γ, M)` with `K ⊂ [M, M + γ]`.
pub fn transfer_case(rng: &mut ChaCha8Rng) -> (Pwa, IntervalUnion, Rational, Rational) {
    let p = {
        let t = random_tail(rng);
        random_pwa(rng, 5, &t)
    };
    let m = random_rational(rng, 0, 6, 4);
    let g = random_positive(rng, 3, 4);
    let width = &g * ratio(rng.gen_range(1..=8), 8);
    let slack = &g - &width;
    let lo = &m + slack * ratio(rng.gen_range(0..=4), 4);
    let k = random_union_in(rng, &lo, &width, 5, 16);
    (p, k, g, m)
}

/// `τ(g[K]) · Λ(g, γ, M) >= τ(K)`.
pub fn transfer_holds(p: &Pwa, k: &IntervalUnion, g: &Rational, m: &Rational) -> Result<Outcome> {
    if !g.is_positive() || k.min() < m || &k.diam() > g {
        return Ok(Outcome::Discard);
    }
    let lam = pwa_lambda(p, g, m)?;
    let image = p.image(k)?;
    let lhs = tau(&image).mul(&lam);
    let rhs = tau(k);
    Ok(Outcome::check(lhs >= rhs, || {
        format!(
            "tau(g[K]) * Lambda = {} < tau(K) = {}",
            show(&lhs),
            show(&rhs)
        )
    }))
}

#[derive(Clone, Debug)]
struct SoundnessCase {
    big_a: Rational,
    a: Rational,
    alpha: Option<Rational>,
    g: AdmissibleFunction,
}

impl Case for SoundnessCase {
    fn shrink(&self) -> Vec<Self> {
        vec![]
    }

    fn dump(&self) -> Value {
        json!({
            "A": format_rational(&self.big_a),
            "a": format_rational(&self.a),
            "alpha": self.alpha.as_ref().map(format_rational),
            "g": self.g,
        })
    }
}

fn soundness_suite(cfg: &SelftestConfig) -> Vec<CheckReport> {
    let n = (cfg.cases / 20).max(5);
    vec![
        run_check(
            Suite::Soundness,
            "chain_agrees_with_coverage",
            cfg.seed,
            n,
            |rng| {
                let g = match rng.gen_range(0..3) {
                    0 => AdmissibleFunction::identity(),
                    1 => AdmissibleFunction::power(int(2)).expect("valid"),
                    _ => pwa_fn(&random_pwa(rng, 3, &TailShape::FinalSlope)),
                };
                SoundnessCase {
                    big_a: random_positive(rng, 2, 4),
                    a: random_positive(rng, 1, 4),
                    alpha: rng.gen_bool(0.5).then(|| ratio(1, rng.gen_range(4..=9))),
                    g,
                }
            },
            |c: &SoundnessCase| outcome(chain_sound(c)),
        ),
        run_check(
            Suite::Soundness,
            "refutation_agrees_with_coverage",
            cfg.seed,
            n,
            |rng| SoundnessCase {
                big_a: random_positive(rng, 2, 4),
                a: random_positive(rng, 2, 4),
                alpha: None,
                g: AdmissibleFunction::exp(random_positive(rng, 2, 4)).expect("valid"),
            },
            |c: &SoundnessCase| outcome(refutation_sound(c)),
        ),
    ]
}

fn soundness_fragmentation(c: &SoundnessCase, n: usize) -> Result<Fragmentation> {
    match &c.alpha {
        Some(alpha) => make_cantor_fragments(&c.big_a, &c.a, alpha, 1, n),
        None => make_faa(&c.big_a, &c.a, n),
    }
}

fn chain_sound(c: &SoundnessCase) -> Result<Outcome> {
    let f = soundness_fragmentation(c, 2)?;
    let eps = match &c.alpha {
        Some(alpha) => (Rational::one() - alpha) / (alpha * int(2)) - Rational::one(),
        None => Rational::one(),
    };
    let params = ChainParams {
        big_a: c.big_a.clone(),
        a: &c.a * int(2),
        eps,
        skip: 0,
    };
    let v = chain_certify(&f, &c.g, &params, 6)?;
    let Verdict::CertifiedHalfLine { from, .. } = v.verdict else {
        return Ok(Outcome::Discard);
    };
    let to = &from * int(2) + int(8);
    if to > int(4000) {
        return Ok(Outcome::Discard);
    }
    let frags = image_prefix_for_horizon(&f, &c.g, CoverageKind::Exact, &to, DEFAULT_BITS)?;
    let rep = sum_coverage_upto(&frags, CoverageKind::Exact, &from, &to)?;
    Ok(Outcome::check(rep.covered, || {
        format!(
            "certified from {} but {:?} is uncovered",
            format_rational(&from),
            rep.uncovered.first()
        )
    }))
}

fn refutation_sound(c: &SoundnessCase) -> Result<Outcome> {
    let f = soundness_fragmentation(c, 1)?;
    let env = envelopes_for(&f, &c.g, 2, 4)?;
    let v = stratum_refute(&env, 6)?;
    let Verdict::CertifiedNoHalfLine { gap_witnesses, .. } = v.verdict else {
        return Ok(Outcome::Discard);
    };
    let to = gap_witnesses
        .iter()
        .map(|w| w.hi().clone())
        .max()
        .expect("witnesses listed");
    let frags = image_prefix_for_horizon(&f, &c.g, CoverageKind::Outer, &to, DEFAULT_BITS)?;
    let rep = sum_coverage_upto(&frags, CoverageKind::Outer, &Rational::zero(), &to)?;
    for w in &gap_witnesses {
        if !rep.sum.misses_open(w.lo(), w.hi()) {
            return Ok(Outcome::Fail(format!(
                "witness ({}, {}) meets the sum",
                format_rational(w.lo()),
                format_rational(w.hi())
            )));
        }
    }
    Ok(Outcome::Pass)
}

/// Runs the selected suites in a fixed order.
pub fn run_selftest(cfg: &SelftestConfig) -> Result<SelftestReport> {
    if cfg.suites.is_empty() {
        return Err(Error::Domain("empty suite selection".into()));
    }
    if cfg.cases == 0 {
        return Err(Error::Domain(
            "at least one case per check is required".into(),
        ));
    }
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(match s {
            Suite::Thickness => thickness_suite(cfg),
            Suite::GapLemma => gap_lemma_suite(cfg),
            Suite::LambdaCalculus => lambda_calculus_suite(cfg),
            Suite::Transfer => transfer_suite(cfg),
            Suite::Soundness => soundness_suite(cfg),
        });
    }
    Ok(SelftestReport {
        seed: cfg.seed,
        checks,
    })
}
