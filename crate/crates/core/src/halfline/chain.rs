use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{certainly_ge, ChainLink, HalfLineVerdict, ReasonKind, Scalar, Verdict};
use crate::error::Result;
use crate::fragmentation::{certify_thick, Fragmentation};
use crate::functions::{exact_image, lambda, lambda_limit, AdmissibleFunction};
use crate::interval::{Interval, IntervalUnion};
use crate::numeric::{LogAffine, DEFAULT_BITS};
use crate::rational::{format_rational, int, Extended, Rational};
use crate::thickness::tau;

const LAMBDA_PRECISION: u32 = 32;
/// How many tail indices the Λ route tries before giving up.
const LAMBDA_ROUTE_SEARCH: usize = 64;

/// Hypotheses `(A, a, 1+ε)` for the `Λ(g,A)`-small regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainParams {
    pub big_a: Rational,
    pub a: Rational,
    pub eps: Rational,
    /// Fragments before this index are exempt from the thickness check.
    pub skip: usize,
}

/// Hypotheses `(A, a, τ)` with `Λ(g,A) <= R` for the large-thickness regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigTauParams {
    pub big_a: Rational,
    pub a: Rational,
    pub tau: Rational,
    pub r: Rational,
}

/// An image fragment `g[K]` summarized by its hull endpoints, a lower bound
/// on its thickness and an upper bound on its largest gap.
#[derive(Clone, Debug)]
pub struct ImageFragment {
    pub lo: Scalar,
    pub hi: Scalar,
    pub tau: Extended,
    pub gap: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// Later pairs are scalar multiples of pair `from` (exponential images of translates).
    ScaleInvariant,
    /// Later pairs are translates of pair `from` (`g` affine past its start).
    EventuallyAffine,
    /// Every pair from `from` on satisfies the conditions by the window bounds
    /// on `Λ(g, ·, min K_from)`.
    LambdaRoute,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailProof {
    pub kind: TailKind,
    pub from: usize,
}

impl TailProof {
    fn needs_direct_check(&self) -> bool {
        self.kind != TailKind::LambdaRoute
    }
}

/// `Λ(g,A)` against `min{ √((1+ε)/(1+ε/2)), ⁵√(3/2), ³√(A/a) }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub lambda_limit_upper: Extended,
    pub eps_bound: bool,
    pub fifth_root_bound: bool,
    pub ratio_bound: bool,
    pub satisfied: bool,
}

impl ThresholdReport {
    pub fn compute(g: &AdmissibleFunction, p: &ChainParams) -> Result<Self> {
        let lam = lambda_limit(g, &p.big_a, LAMBDA_PRECISION)?.upper;
        let below = |power: usize, bound: Rational| match &lam {
            Extended::Finite(l) => num_traits::pow(l.clone(), power) < bound,
            Extended::Infinite => false,
        };
        let one = Rational::one();
        let eps_bound = below(2, (&one + &p.eps) / (&one + &p.eps / int(2)));
        let fifth_root_bound = below(5, Rational::new(3.into(), 2.into()));
        let ratio_bound = below(3, &p.big_a / &p.a);
        Ok(Self {
            lambda_limit_upper: lam,
            eps_bound,
            fifth_root_bound,
            ratio_bound,
            satisfied: eps_bound && fifth_root_bound && ratio_bound,
        })
    }
}

fn scalar_at(g: &Arc<AdmissibleFunction>, x: &Rational) -> Scalar {
    match g.exp_rate() {
        Some(r) => Scalar::Exp(LogAffine::rational(r * x)),
        None => Scalar::Image(g.clone(), x.clone()),
    }
}

fn ext_div(a: &Extended, b: &Extended) -> Extended {
    match (a, b) {
        (Extended::Infinite, _) => Extended::Infinite,
        (Extended::Finite(_), Extended::Infinite) => Extended::Finite(Rational::zero()),
        (Extended::Finite(x), Extended::Finite(y)) => Extended::Finite(x / y),
    }
}

/// Summarizes `g[K]`: exact for functions with rational images, otherwise via
/// `τ(g[K]) >= τ(K) / Λ(g, diam K, min K)` and the longest-gap bound.
pub fn image_fragment(g: &Arc<AdmissibleFunction>, k: &IntervalUnion) -> Result<ImageFragment> {
    if g.is_exact() {
        let img = exact_image(g, k)?;
        return Ok(ImageFragment {
            lo: Scalar::Exact(img.min().clone()),
            hi: Scalar::Exact(img.max().clone()),
            tau: tau(&img),
            gap: img.largest_gap_length(),
        });
    }
    let lo = scalar_at(g, k.min());
    let hi = scalar_at(g, k.max());
    let tk = tau(k);
    if tk.is_infinite() {
        return Ok(ImageFragment {
            lo,
            hi,
            tau: Extended::Infinite,
            gap: Rational::zero(),
        });
    }
    let diam_hi = hi
        .enclose(DEFAULT_BITS)?
        .sub(&lo.enclose(DEFAULT_BITS)?)
        .hi()
        .clone();
    let lam = lambda(g, &k.diam(), k.min(), LAMBDA_PRECISION)?.upper;
    let t = ext_div(&tk, &lam);
    let gap = match &t {
        Extended::Finite(t) => &diam_hi / (Rational::one() + t * int(2)),
        Extended::Infinite => Rational::zero(),
    };
    Ok(ImageFragment {
        lo,
        hi,
        tau: t,
        gap,
    })
}

fn gap_fits(gap: &Rational, into: &ImageFragment) -> bool {
    let g = Scalar::Exact(gap.clone());
    certainly_ge(&[&into.hi], &[&into.lo, &g])
}

/// The direct conditions for the pair `(n, n+1)`; the error names the first failure.
fn pair_check(k: &ImageFragment, k1: &ImageFragment) -> std::result::Result<(), String> {
    let one = Rational::one();
    if !k.tau.gt_rational(&one)
        || !k1.tau.gt_rational(&one)
        || !k.tau.mul(&k1.tau).gt_rational(&one)
    {
        return Err(format!(
            "thickness product not > 1 (lower bounds {} and {})",
            k.tau, k1.tau
        ));
    }
    if !gap_fits(&k.gap, k1) {
        return Err(format!(
            "largest gap bound {} exceeds the next image diameter",
            format_rational(&k.gap)
        ));
    }
    if !gap_fits(&k1.gap, k) {
        return Err(format!(
            "largest gap bound {} of the next image exceeds this image diameter",
            format_rational(&k1.gap)
        ));
    }
    if !certainly_ge(&[&k.hi, &k.hi], &[&k.lo, &k1.lo]) {
        return Err(format!(
            "2g(y_n) >= g(x_n) + g(x_n+1) not certified ({} vs {} + {})",
            k.hi, k.lo, k1.lo
        ));
    }
    if !certainly_ge(&[&k.hi, &k1.hi], &[&k1.lo, &k1.lo]) {
        return Err(format!(
            "g(y_n) + g(y_n+1) >= 2g(x_n+1) not certified ({} + {} vs {})",
            k.hi, k1.hi, k1.lo
        ));
    }
    Ok(())
}

fn twice_hi(s: &Scalar) -> Result<Rational> {
    Ok(s.enclose(DEFAULT_BITS)?.hi() * int(2))
}

fn links(frags: &[ImageFragment], from: usize) -> Result<Vec<ChainLink>> {
    let mut out = Vec::new();
    for n in from..frags.len().saturating_sub(1) {
        let (a, b) = (&frags[n], &frags[n + 1]);
        let (alo, ahi) = (a.lo.enclose(DEFAULT_BITS)?, a.hi.enclose(DEFAULT_BITS)?);
        let (blo, bhi) = (b.lo.enclose(DEFAULT_BITS)?, b.hi.enclose(DEFAULT_BITS)?);
        let j = Interval::new(alo.hi() * int(2), ahi.lo() * int(2));
        let j_next = Interval::new(alo.hi() + blo.hi(), ahi.lo() + bhi.lo());
        if let (Ok(j), Ok(j_next)) = (j, j_next) {
            out.push(ChainLink { n, j, j_next });
        }
    }
    Ok(out)
}

/// Runs the chain argument on summarized image fragments. Pairs below the
/// tail index are checked directly; `n0` is the start of the longest passing
/// run that reaches the tail.
pub fn run_chain(frags: &[ImageFragment], tail: Option<TailProof>) -> Result<HalfLineVerdict> {
    let pairs = frags.len().saturating_sub(1);
    if pairs == 0 {
        return Ok(HalfLineVerdict::bare(Verdict::inconclusive(
            ReasonKind::Inequality,
            None,
            "need at least two fragments",
        )));
    }
    let checks: Vec<std::result::Result<(), String>> = (0..pairs)
        .into_par_iter()
        .map(|n| pair_check(&frags[n], &frags[n + 1]))
        .collect();

    if let Some(t) = &tail {
        let direct_end = if t.needs_direct_check() {
            t.from + 1
        } else {
            t.from
        };
        let tail_holds =
            direct_end <= pairs && !(t.needs_direct_check() && checks[t.from].is_err());
        if tail_holds {
            let n0 = (0..direct_end)
                .rev()
                .find(|&n| checks[n].is_err())
                .map_or(0, |n| n + 1);
            let from = twice_hi(&frags[n0].lo)?;
            return Ok(HalfLineVerdict {
                verdict: Verdict::CertifiedHalfLine { from, n0 },
                chain: Some(links(frags, n0)?),
                threshold: None,
                tail_proof: tail,
            });
        }
    }
    let last = pairs - 1;
    if let Err(detail) = &checks[last] {
        let first_bad = (0..pairs).find(|&n| checks[n].is_err()).unwrap_or(last);
        let detail = match &checks[first_bad] {
            Err(d) if first_bad != last => {
                format!("pair {last}: {detail} (first failure at pair {first_bad}: {d})")
            }
            _ => format!("pair {last}: {detail}"),
        };
        return Ok(HalfLineVerdict::bare(Verdict::inconclusive(
            ReasonKind::Inequality,
            Some(last),
            detail,
        )));
    }
    let n0 = (0..pairs)
        .rev()
        .find(|&n| checks[n].is_err())
        .map_or(0, |n| n + 1);
    let from = twice_hi(&frags[n0].lo)?;
    let to = frags[pairs].hi.enclose(DEFAULT_BITS)?.lo() * int(2);
    Ok(HalfLineVerdict {
        verdict: Verdict::CoveredUpToHorizon { from, to },
        chain: Some(links(frags, n0)?),
        threshold: None,
        tail_proof: None,
    })
}

fn window_bound(g: &AdmissibleFunction, gamma: &Rational, m: &Rational) -> Result<Extended> {
    Ok(lambda(g, gamma, m, LAMBDA_PRECISION)?.upper)
}

/// The three window conditions that carry the chain from fragment `s` on,
/// where all later fragments are translates of `k` by `period`:
/// `τ > Λ(D)`, `1 + 2τ/Λ(D) >= Λ(P+D)` and `D/(P−D) >= Λ(P)`, all at `M = min K_s`.
fn lambda_route_holds(
    g: &AdmissibleFunction,
    k: &IntervalUnion,
    period: &Rational,
    m: &Rational,
) -> Result<bool> {
    let d = k.diam();
    if d.is_zero() || period <= &d {
        return Ok(false);
    }
    let Extended::Finite(ld) = window_bound(g, &d, m)? else {
        return Ok(false);
    };
    let tk = tau(k);
    if !tk.gt_rational(&ld) {
        return Ok(false);
    }
    let spread = match ext_div(&tk, &Extended::Finite(ld)) {
        Extended::Infinite => Extended::Infinite,
        Extended::Finite(t) => Extended::Finite(Rational::one() + t * int(2)),
    };
    if spread < window_bound(g, &(period + &d), m)? {
        return Ok(false);
    }
    let Extended::Finite(lp) = window_bound(g, period, m)? else {
        return Ok(false);
    };
    Ok(&d / (period - &d) >= lp)
}

fn find_tail(f: &Fragmentation, g: &AdmissibleFunction) -> Result<Option<TailProof>> {
    let (Some(t), Some(period)) = (f.translate_start(f.len()), f.period()) else {
        return Ok(None);
    };
    if g.exp_rate().is_some() {
        return Ok(Some(TailProof {
            kind: TailKind::ScaleInvariant,
            from: t,
        }));
    }
    let kt = f.fragment(t)?;
    if let Some(x) = g.affine_from() {
        let behind = &x - kt.min();
        let steps = if behind <= Rational::zero() {
            0.into()
        } else {
            (behind / period).ceil().to_integer()
        };
        let steps: usize = steps.try_into().unwrap_or(usize::MAX / 2);
        return Ok(Some(TailProof {
            kind: TailKind::EventuallyAffine,
            from: t + steps,
        }));
    }
    for s in t..t + LAMBDA_ROUTE_SEARCH {
        let m = kt.min() + period * int((s - t) as i64);
        if lambda_route_holds(g, &kt, period, &m)? {
            return Ok(Some(TailProof {
                kind: TailKind::LambdaRoute,
                from: s,
            }));
        }
    }
    Ok(None)
}

fn engine(f: &Fragmentation, g: &AdmissibleFunction, horizon: usize) -> Result<HalfLineVerdict> {
    let tail = find_tail(f, g)?;
    let need = tail.as_ref().map_or(0, |t| t.from + 2);
    let count = horizon.max(need).max(2);
    let count = if f.period().is_some() {
        count
    } else {
        count.min(f.len())
    };
    let shared = Arc::new(g.clone());
    let frags = f
        .prefix(count)?
        .par_iter()
        .map(|k| image_fragment(&shared, k))
        .collect::<Result<Vec<_>>>()?;
    run_chain(&frags, tail)
}

fn precondition(detail: impl Into<String>, index: Option<usize>) -> HalfLineVerdict {
    HalfLineVerdict::bare(Verdict::inconclusive(
        ReasonKind::Precondition,
        index,
        detail,
    ))
}

/// Chain certification under `(A, a, 1+ε)`-thickness. `horizon` is the number
/// of fragments examined when no tail argument is available.
pub fn chain_certify(
    f: &Fragmentation,
    g: &AdmissibleFunction,
    p: &ChainParams,
    horizon: usize,
) -> Result<HalfLineVerdict> {
    if let Err(v) = certify_thick(f, &p.big_a, &p.a, &(Rational::one() + &p.eps), p.skip) {
        return Ok(precondition(v.to_string(), Some(v.index)));
    }
    let threshold = ThresholdReport::compute(g, p)?;
    let mut out = engine(f, g, horizon)?;
    if let Verdict::Inconclusive { reason } = &mut out.verdict {
        if !threshold.satisfied && reason.kind == ReasonKind::Inequality {
            reason.kind = ReasonKind::Threshold;
            let why = if p.big_a <= p.a {
                "threshold unreachable since A <= a"
            } else {
                "threshold not met"
            };
            reason.detail = format!("{why}; {}", reason.detail);
        }
    }
    out.threshold = Some(threshold);
    Ok(out)
}

/// Chain certification under `(A, a, τ)`-thickness with `τ > R⁷`,
/// `a < A/R³` and `Λ(g, A) <= R`.
pub fn chain_certify_bigtau(
    f: &Fragmentation,
    g: &AdmissibleFunction,
    p: &BigTauParams,
    horizon: usize,
) -> Result<HalfLineVerdict> {
    let r7 = num_traits::pow(p.r.clone(), 7);
    if p.tau <= r7 {
        return Ok(precondition(
            format!(
                "tau = {} must exceed R^7 = {}",
                format_rational(&p.tau),
                format_rational(&r7)
            ),
            None,
        ));
    }
    let a0 = &p.big_a / num_traits::pow(p.r.clone(), 3);
    if p.a >= a0 {
        return Ok(precondition(
            format!(
                "a = {} must be below A/R^3 = {}",
                format_rational(&p.a),
                format_rational(&a0)
            ),
            None,
        ));
    }
    let lam = lambda_limit(g, &p.big_a, LAMBDA_PRECISION)?.upper;
    if !(lam <= Extended::Finite(p.r.clone())) {
        return Ok(precondition(
            format!(
                "Lambda(g, A) <= {lam} is not certified <= R = {}",
                format_rational(&p.r)
            ),
            None,
        ));
    }
    if let Err(v) = certify_thick(f, &p.big_a, &p.a, &p.tau, 0) {
        return Ok(precondition(v.to_string(), Some(v.index)));
    }
    engine(f, g, horizon)
}

/// Whether the pair conditions hold for `K̃_n`, `K̃_{n+1}`.
pub fn pair_holds(k: &ImageFragment, k1: &ImageFragment) -> bool {
    pair_check(k, k1).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragmentation::{make_cantor_fragments, make_faa};
    use crate::rational::ratio;

    fn params(big_a: Rational, a: Rational, eps: Rational) -> ChainParams {
        ChainParams {
            big_a,
            a,
            eps,
            skip: 0,
        }
    }

    #[test]
    fn square_on_faa_is_certified() {
        let f = make_faa(&int(1), &ratio(1, 2), 4).unwrap();
        let g = AdmissibleFunction::power(int(2)).unwrap();
        let v = chain_certify(&f, &g, &params(int(1), ratio(3, 5), int(1)), 8).unwrap();
        assert!(
            matches!(v.verdict, Verdict::CertifiedHalfLine { .. }),
            "{v:?}"
        );
    }

    #[test]
    fn cantor_square_uses_the_window_route() {
        let f = make_cantor_fragments(&int(1), &ratio(1, 2), &ratio(1, 5), 2, 3).unwrap();
        let g = AdmissibleFunction::power(int(2)).unwrap();
        let v = chain_certify(&f, &g, &params(int(1), ratio(3, 5), int(1)), 4).unwrap();
        assert!(
            matches!(v.verdict, Verdict::CertifiedHalfLine { .. }),
            "{v:?}"
        );
        assert_eq!(v.tail_proof.unwrap().kind, TailKind::LambdaRoute);
    }

    #[test]
    fn exponential_regimes() {
        // e^{-rA} + e^{ra} < 2 < e^{-ra} + e^{rA} with r = 1/2, a = 1, A = 10
        let f = make_faa(&int(10), &int(1), 3).unwrap();
        let g = AdmissibleFunction::exp(ratio(1, 2)).unwrap();
        let v = chain_certify(&f, &g, &params(int(10), int(2), int(1)), 4).unwrap();
        assert!(
            matches!(v.verdict, Verdict::CertifiedHalfLine { n0: 0, .. }),
            "{v:?}"
        );
        let g = AdmissibleFunction::exp(int(2)).unwrap();
        let v = chain_certify(&f, &g, &params(int(10), int(2), int(1)), 4).unwrap();
        assert!(matches!(v.verdict, Verdict::Inconclusive { .. }), "{v:?}");
    }

    #[test]
    fn unreachable_threshold_is_reported() {
        let f = make_faa(&int(1), &int(2), 4).unwrap();
        let v = chain_certify(
            &f,
            &AdmissibleFunction::identity(),
            &params(int(1), int(3), int(1)),
            6,
        )
        .unwrap();
        match v.verdict {
            Verdict::Inconclusive { reason } => assert_eq!(reason.kind, ReasonKind::Threshold),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_thickness_is_a_precondition_verdict() {
        let f = make_faa(&int(1), &int(1), 3).unwrap();
        let v = chain_certify(
            &f,
            &AdmissibleFunction::identity(),
            &params(int(1), int(1), int(1)),
            4,
        )
        .unwrap();
        match v.verdict {
            Verdict::Inconclusive { reason } => assert_eq!(reason.kind, ReasonKind::Precondition),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bigtau_boundaries() {
        let f = make_cantor_fragments(&int(1), &ratio(1, 20), &ratio(1, 300), 1, 3).unwrap();
        let g = AdmissibleFunction::exp(ratio(1, 2)).unwrap();
        let ok = BigTauParams {
            big_a: int(1),
            a: ratio(1, 10),
            tau: ratio(299, 2),
            r: int(2),
        };
        let v = chain_certify_bigtau(&f, &g, &ok, 4).unwrap();
        assert!(
            matches!(v.verdict, Verdict::CertifiedHalfLine { .. }),
            "{v:?}"
        );
        let edge = BigTauParams {
            tau: int(128),
            ..ok.clone()
        };
        assert!(matches!(
            chain_certify_bigtau(&f, &g, &edge, 4).unwrap().verdict,
            Verdict::Inconclusive { .. }
        ));
        let wide = BigTauParams {
            a: ratio(1, 8),
            ..ok
        };
        assert!(matches!(
            chain_certify_bigtau(&f, &g, &wide, 4).unwrap().verdict,
            Verdict::Inconclusive { .. }
        ));
    }
}
