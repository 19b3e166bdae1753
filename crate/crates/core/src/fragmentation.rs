//! Ordered fragmentations of semibounded closed sets: a finite prefix of
//! compact fragments `K_0, K_1, …` with `max K_n < min K_{n+1}`, optionally
//! followed by a declared translation rule that generates the rest.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{AdmissibleFunction, Pwa, PwaTail};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{format_rational, int, ratio, serde_rational, Extended, Rational};
use crate::thickness::tau;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    /// `K_{n+1} = K_n + period` for every `n` past the prefix.
    Translate {
        #[serde(with = "serde_rational")]
        period: Rational,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFragmentation")]
pub struct Fragmentation {
    fragments: Vec<IntervalUnion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail: Option<TailRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFragmentation {
    fragments: Vec<IntervalUnion>,
    #[serde(default)]
    tail: Option<TailRule>,
}

impl TryFrom<RawFragmentation> for Fragmentation {
    type Error = Error;

    fn try_from(raw: RawFragmentation) -> Result<Self> {
        Fragmentation::new(raw.fragments, raw.tail)
    }
}

impl Fragmentation {
    pub fn new(fragments: Vec<IntervalUnion>, tail: Option<TailRule>) -> Result<Self> {
        if fragments.is_empty() {
            return Err(Error::InvalidFragmentation(
                "at least one fragment is required".into(),
            ));
        }
        for (n, w) in fragments.windows(2).enumerate() {
            if w[0].max() >= w[1].min() {
                return Err(Error::InvalidFragmentation(format!(
                    "fragments {n} and {} are not ordered: max K_{n} = {} >= min K_{} = {}",
                    n + 1,
                    format_rational(w[0].max()),
                    n + 1,
                    format_rational(w[1].min())
                )));
            }
        }
        if let Some(TailRule::Translate { period }) = &tail {
            let last = fragments.last().expect("nonempty");
            if period <= &last.diam() {
                return Err(Error::InvalidFragmentation(format!(
                    "translation period {} does not exceed the last fragment's diameter {}",
                    format_rational(period),
                    format_rational(&last.diam())
                )));
            }
        }
        Ok(Self { fragments, tail })
    }

    pub fn fragments(&self) -> &[IntervalUnion] {
        &self.fragments
    }

    pub fn tail(&self) -> Option<&TailRule> {
        self.tail.as_ref()
    }

    pub fn period(&self) -> Option<&Rational> {
        self.tail
            .as_ref()
            .map(|TailRule::Translate { period }| period)
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fragment `n`, generated from the tail rule past the prefix.
    pub fn fragment(&self, n: usize) -> Result<IntervalUnion> {
        if let Some(k) = self.fragments.get(n) {
            return Ok(k.clone());
        }
        let period = self.period().ok_or_else(|| {
            Error::Refused(format!(
                "fragment {n} requested but only {} are given and no tail is declared",
                self.len()
            ))
        })?;
        let last = self.fragments.len() - 1;
        Ok(self.fragments[last].translate(&(period * int((n - last) as i64))))
    }

    /// The first `n` fragments, extending with the tail rule when needed.
    pub fn prefix(&self, n: usize) -> Result<Vec<IntervalUnion>> {
        (0..n).map(|i| self.fragment(i)).collect()
    }

    /// Copy whose explicit prefix has exactly `n` fragments (`n >= 1`).
    pub fn extended(&self, n: usize) -> Result<Fragmentation> {
        let n = n.max(1);
        if n < self.len() && self.tail.is_some() {
            return Err(Error::Refused(
                "truncating a fragmentation would change its tail rule".into(),
            ));
        }
        Fragmentation::new(self.prefix(n)?, self.tail.clone())
    }

    /// Least `t` such that, within the prefix of length `h`, all fragments from
    /// `t` on are consecutive translates by the tail period. `None` without a tail.
    pub fn translate_start(&self, h: usize) -> Option<usize> {
        let period = self.period()?;
        let h = h.max(self.len());
        let mut t = self.len() - 1;
        while t > 0 && self.fragments[t - 1].translate(period) == self.fragments[t] {
            t -= 1;
        }
        Some(t.min(h - 1))
    }

    /// The same fragmentation shifted so that `min K_0 = 0`.
    pub fn shifted_to_origin(&self) -> Fragmentation {
        let by = -self.fragments[0].min().clone();
        Fragmentation {
            fragments: self.fragments.iter().map(|k| k.translate(&by)).collect(),
            tail: self.tail.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fragmentation serializes")
    }
}

/// `F(A,a)`: fragments `[n(A+a), n(A+a)+A]` for `n = 0..=N`, translation tail.
pub fn make_faa(big_a: &Rational, a: &Rational, n: usize) -> Result<Fragmentation> {
    if !(big_a > &Rational::zero() && a > &Rational::zero()) {
        return Err(Error::Domain("F(A,a) needs A > 0 and a > 0".into()));
    }
    let period = big_a + a;
    let fragments = (0..=n)
        .map(|i| {
            let lo = &period * int(i as i64);
            IntervalUnion::interval(Interval::new(lo.clone(), lo + big_a).expect("A > 0"))
        })
        .collect();
    Fragmentation::new(fragments, Some(TailRule::Translate { period }))
}

/// Depth-`depth` approximant of the middle-`alpha` Cantor set on `[0, length]`.
pub fn middle_alpha_cantor(length: &Rational, alpha: &Rational, depth: u32) -> IntervalUnion {
    assert!(
        alpha > &Rational::zero() && alpha < &Rational::one(),
        "alpha must lie in (0, 1)"
    );
    let keep = (Rational::one() - alpha) / int(2);
    let mut parts = vec![Interval::new(Rational::zero(), length.clone()).expect("length >= 0")];
    for _ in 0..depth {
        parts = parts
            .into_iter()
            .flat_map(|p| {
                let side = p.length() * &keep;
                let left = Interval::new(p.lo().clone(), p.lo() + &side).expect("ordered");
                let right = Interval::new(p.hi() - &side, p.hi().clone()).expect("ordered");
                [left, right]
            })
            .collect();
    }
    IntervalUnion::from_canonical(parts).expect("cantor parts are canonical")
}

/// Fragments are Cantor approximants of length `A` at spacing `a`.
pub fn make_cantor_fragments(
    big_a: &Rational,
    a: &Rational,
    alpha: &Rational,
    depth: u32,
    n: usize,
) -> Result<Fragmentation> {
    if !(big_a > &Rational::zero() && a > &Rational::zero()) {
        return Err(Error::Domain(
            "cantor fragments need A > 0 and a > 0".into(),
        ));
    }
    if !(alpha > &Rational::zero() && alpha < &Rational::one()) {
        return Err(Error::Domain("alpha must lie in (0, 1)".into()));
    }
    let base = middle_alpha_cantor(big_a, alpha, depth);
    let period = big_a + a;
    let fragments = (0..=n)
        .map(|i| base.translate(&(&period * int(i as i64))))
        .collect();
    Fragmentation::new(fragments, Some(TailRule::Translate { period }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailProof {
    GeneratorUniform,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThicknessCertificate {
    #[serde(rename = "A", with = "serde_rational")]
    pub big_a: Rational,
    #[serde(with = "serde_rational")]
    pub a: Rational,
    #[serde(with = "serde_rational")]
    pub tau: Rational,
    pub skipped: usize,
    pub checked_prefix: usize,
    pub tail_proof: TailProof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThickCondition {
    DiameterBelowA,
    DiameterAbove2A,
    DistanceNotBelowA,
    ThicknessBelowTau,
    DistanceBelowA,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("condition {condition:?} violated at fragment {index}: {detail}")]
pub struct Violation {
    pub index: usize,
    pub condition: ThickCondition,
    pub detail: String,
    /// Set when the violation comes from the declared tail rather than the prefix.
    pub in_tail: bool,
}

fn thick_fragment(
    k: &IntervalUnion,
    n: usize,
    big_a: &Rational,
    t: &Rational,
    in_tail: bool,
) -> Result<(), Violation> {
    let d = k.diam();
    let v = |condition, detail: String| Violation {
        index: n,
        condition,
        detail,
        in_tail,
    };
    if &d < big_a {
        return Err(v(
            ThickCondition::DiameterBelowA,
            format!(
                "diam = {} < A = {}",
                format_rational(&d),
                format_rational(big_a)
            ),
        ));
    }
    if d > big_a * int(2) {
        return Err(v(
            ThickCondition::DiameterAbove2A,
            format!("diam = {} > 2A", format_rational(&d)),
        ));
    }
    let th = tau(k);
    if !th.ge_rational(t) {
        return Err(v(
            ThickCondition::ThicknessBelowTau,
            format!("tau = {th} < {}", format_rational(t)),
        ));
    }
    Ok(())
}

/// Verifies `A <= diam K_n <= 2A`, `dist(K_n, K_{n+1}) < a`, `τ(K_n) >= tau`
/// for every `n >= skip` in the prefix, and for the declared tail.
pub fn certify_thick(
    f: &Fragmentation,
    big_a: &Rational,
    a: &Rational,
    t: &Rational,
    skip: usize,
) -> Result<ThicknessCertificate, Violation> {
    if big_a <= &Rational::zero() {
        return Err(Violation {
            index: skip,
            condition: ThickCondition::DiameterBelowA,
            detail: "A must be positive".into(),
            in_tail: false,
        });
    }
    let frags = f.fragments();
    for n in skip..frags.len() {
        thick_fragment(&frags[n], n, big_a, t, false)?;
        if n + 1 < frags.len() {
            let dist = frags[n + 1].min() - frags[n].max();
            if &dist >= a {
                return Err(Violation {
                    index: n,
                    condition: ThickCondition::DistanceNotBelowA,
                    detail: format!(
                        "dist(K_{n}, K_{}) = {} is not < a = {}",
                        n + 1,
                        format_rational(&dist),
                        format_rational(a)
                    ),
                    in_tail: false,
                });
            }
        }
    }
    let tail_proof = match f.period() {
        Some(period) => {
            // Every generated fragment is a translate of the last one, so the
            // per-fragment conditions carry over; only the spacing is new.
            let n = frags.len() - 1;
            let dist = period - frags[n].diam();
            if &dist >= a {
                return Err(Violation {
                    index: n,
                    condition: ThickCondition::DistanceNotBelowA,
                    detail: format!(
                        "tail spacing {} is not < a = {}",
                        format_rational(&dist),
                        format_rational(a)
                    ),
                    in_tail: true,
                });
            }
            TailProof::GeneratorUniform
        }
        None => TailProof::None,
    };
    Ok(ThicknessCertificate {
        big_a: big_a.clone(),
        a: a.clone(),
        tau: t.clone(),
        skipped: skip,
        checked_prefix: frags.len(),
        tail_proof,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityCertificate {
    #[serde(with = "serde_rational")]
    pub a: Rational,
    pub checked_prefix: usize,
    pub tail_proof: TailProof,
}

/// Verifies `dist(K_n, K_{n+1}) >= a` on the prefix and the declared tail.
pub fn certify_sparse(f: &Fragmentation, a: &Rational) -> Result<SparsityCertificate, Violation> {
    let frags = f.fragments();
    for n in 0..frags.len().saturating_sub(1) {
        let dist = frags[n + 1].min() - frags[n].max();
        if &dist < a {
            return Err(Violation {
                index: n,
                condition: ThickCondition::DistanceBelowA,
                detail: format!(
                    "dist(K_{n}, K_{}) = {} < a = {}",
                    n + 1,
                    format_rational(&dist),
                    format_rational(a)
                ),
                in_tail: false,
            });
        }
    }
    let tail_proof = match f.period() {
        Some(period) => {
            let n = frags.len() - 1;
            let dist = period - frags[n].diam();
            if &dist < a {
                return Err(Violation {
                    index: n,
                    condition: ThickCondition::DistanceBelowA,
                    detail: format!(
                        "tail spacing {} < a = {}",
                        format_rational(&dist),
                        format_rational(a)
                    ),
                    in_tail: true,
                });
            }
            TailProof::GeneratorUniform
        }
        None => TailProof::None,
    };
    Ok(SparsityCertificate {
        a: a.clone(),
        checked_prefix: frags.len(),
        tail_proof,
    })
}

/// Increasing piecewise-affine `f` with `f[hull K_n] ⊆ [n-eps, n+eps]`.
///
/// Hull `K_0` maps onto `[0, eps]` (or `[eps/2, eps]` when `min K_0 > 0`) and
/// hull `K_n` onto `[n-eps, n+eps]`. With a translation tail the breakpoint
/// pattern repeats with rise 1 per period, so the property holds for every `n`.
pub fn make_collapse_counterexample(
    f: &Fragmentation,
    eps: &Rational,
) -> Result<AdmissibleFunction> {
    if !(eps > &Rational::zero() && eps < &ratio(1, 4)) {
        return Err(Error::Domain("eps must lie in (0, 1/4)".into()));
    }
    if f.fragments()[0].min() < &Rational::zero() {
        return Err(Error::Domain("fragmentation must lie in [0, inf)".into()));
    }
    // With a tail, one generated fragment closes the repeating pattern.
    let frags = if f.tail().is_some() {
        f.prefix(f.len().max(2) + 1)?
    } else {
        f.fragments().to_vec()
    };
    if let Some((n, _)) = frags.iter().enumerate().find(|(_, k)| k.diam().is_zero()) {
        return Err(Error::Domain(format!("fragment {n} has zero diameter")));
    }
    let mut points = Vec::with_capacity(2 * frags.len() + 1);
    let x0 = frags[0].min().clone();
    if x0 > Rational::zero() {
        points.push((Rational::zero(), Rational::zero()));
        points.push((x0, eps / int(2)));
    } else {
        points.push((x0, Rational::zero()));
    }
    points.push((frags[0].max().clone(), eps.clone()));
    let last = frags.len() - 1;
    let mut pattern_from = 0;
    for (n, k) in frags.iter().enumerate().skip(1) {
        let level = int(n as i64);
        if n == last && f.tail().is_some() {
            pattern_from = points.len() - 2;
            points.push((k.min().clone(), &level - eps));
            break;
        }
        points.push((k.min().clone(), &level - eps));
        points.push((k.max().clone(), &level + eps));
    }
    let tail = if f.tail().is_some() {
        PwaTail::Periodic {
            from_index: pattern_from,
        }
    } else {
        PwaTail::FinalSlope(Rational::one())
    };
    Ok(AdmissibleFunction::PiecewiseAffine(Pwa::new(points, tail)?))
}

/// Minimal value of the relative-variation lower bound exhibited by the
/// collapse construction: `(1 - 2eps) A / (2 eps a) · a / (A + a)`.
pub fn collapse_lambda_floor(big_a: &Rational, a: &Rational, eps: &Rational) -> Rational {
    (Rational::one() - eps * int(2)) * big_a / (eps * int(2) * a) * (a / (big_a + a))
}

/// `true` iff `g` maps every fragment in the prefix to an ordered image, i.e.
/// the image fragmentation keeps `max < min` between neighbours.
pub fn image_preserves_order(images: &[IntervalUnion]) -> bool {
    images.windows(2).all(|w| w[0].max() < w[1].min())
}

/// Largest thickness the prefix supports: the minimum of `τ(K_n)`.
pub fn min_thickness(f: &Fragmentation) -> Extended {
    f.fragments()
        .iter()
        .map(tau)
        .min()
        .unwrap_or(Extended::Infinite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::eval_exact;

    fn iv(a: i64, b: i64) -> IntervalUnion {
        IntervalUnion::interval(Interval::new(int(a), int(b)).unwrap())
    }

    #[test]
    fn faa_layout() {
        let f = make_faa(&int(1), &int(1), 2).unwrap();
        assert_eq!(f.fragments(), &[iv(0, 1), iv(2, 3), iv(4, 5)]);
        assert_eq!(f.fragment(5).unwrap(), iv(10, 11));
        assert_eq!(f.translate_start(3), Some(0));
    }

    #[test]
    fn ordering_is_enforced() {
        assert!(Fragmentation::new(vec![iv(0, 2), iv(2, 3)], None).is_err());
        assert!(
            Fragmentation::new(vec![iv(0, 2)], Some(TailRule::Translate { period: int(2) }))
                .is_err()
        );
        assert!(Fragmentation::new(vec![], None).is_err());
    }

    #[test]
    fn cantor_fragment_thickness() {
        for (alpha, want) in [
            (ratio(1, 3), Extended::Finite(int(1))),
            (ratio(1, 5), Extended::Finite(int(2))),
        ] {
            let f = make_cantor_fragments(&int(1), &ratio(1, 2), &alpha, 3, 2).unwrap();
            assert_eq!(min_thickness(&f), want);
        }
        let f = make_cantor_fragments(&int(1), &ratio(1, 2), &ratio(1, 5), 0, 2).unwrap();
        assert_eq!(min_thickness(&f), Extended::Infinite);
    }

    #[test]
    fn thick_certificates() {
        let f = make_faa(&int(1), &ratio(1, 2), 5).unwrap();
        let c = certify_thick(&f, &int(1), &ratio(3, 5), &ratio(1, 100), 0).unwrap();
        assert_eq!(c.tail_proof, TailProof::GeneratorUniform);
        let f = make_faa(&int(1), &int(1), 5).unwrap();
        let v = certify_thick(&f, &int(1), &int(1), &ratio(1, 100), 0).unwrap_err();
        assert_eq!(
            (v.index, v.condition),
            (0, ThickCondition::DistanceNotBelowA)
        );
        let f = make_cantor_fragments(&int(1), &ratio(1, 2), &ratio(1, 5), 3, 4).unwrap();
        assert!(certify_thick(&f, &int(1), &ratio(3, 5), &int(2), 0).is_ok());
        let v = certify_thick(&f, &int(1), &ratio(3, 5), &int(3), 0).unwrap_err();
        assert_eq!(v.condition, ThickCondition::ThicknessBelowTau);
    }

    #[test]
    fn sparse_certificates() {
        let f = make_faa(&int(1), &ratio(1, 2), 5).unwrap();
        assert!(certify_sparse(&f, &ratio(1, 2)).is_ok());
        assert_eq!(certify_sparse(&f, &int(1)).unwrap_err().index, 0);
        let single = Fragmentation::new(vec![iv(0, 1)], None).unwrap();
        assert!(certify_sparse(&single, &int(100)).is_ok());
    }

    #[test]
    fn collapse_maps_fragments_near_integers() {
        let eps = ratio(1, 10);
        let f = make_faa(&int(1), &ratio(1, 2), 3).unwrap();
        let g = make_collapse_counterexample(&f, &eps).unwrap();
        for n in 0..12 {
            let k = f.fragment(n).unwrap();
            let lo = eval_exact(&g, k.min()).unwrap();
            let hi = eval_exact(&g, k.max()).unwrap();
            let level = int(n as i64);
            assert!(
                &level - &eps <= lo && hi <= &level + &eps,
                "fragment {n}: [{lo}, {hi}]"
            );
            assert!(&hi - &lo <= &eps * int(2));
            let next = eval_exact(&g, f.fragment(n + 1).unwrap().min()).unwrap();
            assert!(next - hi >= Rational::one() - &eps * int(2));
        }
    }

    #[test]
    fn json_round_trip() {
        let f = make_cantor_fragments(&int(1), &ratio(1, 2), &ratio(1, 3), 1, 1).unwrap();
        let back: Fragmentation = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"fragments":[{"parts":[["0","2"]]},{"parts":[["1","3"]]}]}"#;
        assert!(serde_json::from_str::<Fragmentation>(bad).is_err());
    }
}
