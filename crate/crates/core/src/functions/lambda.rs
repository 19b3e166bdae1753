//! The relative-variation functional
//! `Λ(g, γ, M) = sup { D⁺g(x) / D⁻g(y) : x, y ≥ M, |x − y| ≤ γ }`,
//! its limit as `M → ∞`, and the value ratio `sup_{y ≥ M} g(y+γ)/g(y)`.
//!
//! Piecewise-affine data gives exact rationals. The symbolic families have
//! closed forms that are enclosed on demand. Sums and products are bounded
//! above with the sum and product rules and below by sampling derivative
//! ratios.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::pwa::Segment;
use super::{ratio_lower, AdmissibleFunction, Pwa, PwaTail};
use crate::error::{Error, Result};
use crate::numeric::{self, tighten, Enclosure, LogAffine, DEFAULT_BITS};
use crate::rational::{format_rational, int, serde_rational, Extended, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    Rational {
        #[serde(with = "serde_rational")]
        value: Rational,
    },
    Infinite,
    /// `e^{exponent}`.
    ExpOf {
        exponent: LogAffine,
    },
    /// `base^{exponent}` with a non-integer rational exponent.
    Power {
        #[serde(with = "serde_rational")]
        base: Rational,
        #[serde(with = "serde_rational")]
        exponent: Rational,
    },
    /// `((M+γ)/M)^{b−1} · e^{a((M+γ)^b − M^b)}`.
    StretchedWindow {
        #[serde(with = "serde_rational")]
        a: Rational,
        #[serde(with = "serde_rational")]
        b: Rational,
        #[serde(with = "serde_rational")]
        gamma: Rational,
        #[serde(with = "serde_rational")]
        m: Rational,
    },
}

fn stretched_window(
    a: &Rational,
    b: &Rational,
    gamma: &Rational,
    m: &Rational,
    bits: u32,
) -> Result<Enclosure> {
    let w = bits + 16;
    let hi = m + gamma;
    let factor = numeric::pow(&(&hi / m), &(b - Rational::one()), w)?;
    let diff = numeric::pow(&hi, b, w)?
        .sub(&numeric::pow(m, b, w)?)
        .scale(a);
    Ok(factor
        .mul(&numeric::exp_enclosure(&diff, w))
        .round_out(bits + 4))
}

impl ClosedForm {
    /// Enclosure with roughly `bits` relative bits; `None` for `+∞`.
    pub fn enclose(&self, bits: u32) -> Option<Enclosure> {
        Some(match self {
            ClosedForm::Rational { value } => Enclosure::exact(value.clone()),
            ClosedForm::Infinite => return None,
            ClosedForm::ExpOf { exponent } => exponent.exp(bits),
            ClosedForm::Power { base, exponent } => numeric::pow(base, exponent, bits).ok()?,
            ClosedForm::StretchedWindow { a, b, gamma, m } => {
                stretched_window(a, b, gamma, m, bits).ok()?
            }
        })
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Rational { value } => f.write_str(&format_rational(value)),
            ClosedForm::Infinite => f.write_str("inf"),
            ClosedForm::ExpOf { exponent } => write!(f, "exp({exponent})"),
            ClosedForm::Power { base, exponent } => {
                write!(
                    f,
                    "({})^({})",
                    format_rational(base),
                    format_rational(exponent)
                )
            }
            ClosedForm::StretchedWindow { a, b, gamma, m } => {
                let (a, b, g, m) = (
                    format_rational(a),
                    format_rational(b),
                    format_rational(gamma),
                    format_rational(m),
                );
                write!(
                    f,
                    "(({m}+{g})/{m})^({b}-1) * exp({a}*(({m}+{g})^{b} - {m}^{b}))"
                )
            }
        }
    }
}

/// Certified bounds `lower <= Λ <= upper`.
///
/// `exact` means the value is known in closed form (`closed_form`); the
/// bounds are then an enclosure of that value of the requested width, and
/// coincide when the value is rational or infinite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lower: Extended,
    pub upper: Extended,
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
}

impl LambdaEstimate {
    pub fn rational(q: Rational) -> Self {
        Self {
            lower: Extended::Finite(q.clone()),
            upper: Extended::Finite(q.clone()),
            exact: true,
            closed_form: Some(ClosedForm::Rational { value: q }),
        }
    }

    pub fn infinite() -> Self {
        Self {
            lower: Extended::Infinite,
            upper: Extended::Infinite,
            exact: true,
            closed_form: Some(ClosedForm::Infinite),
        }
    }

    pub fn closed(cf: ClosedForm, precision: u32) -> Result<Self> {
        match cf {
            ClosedForm::Rational { value } => return Ok(Self::rational(value)),
            ClosedForm::Infinite => return Ok(Self::infinite()),
            _ => {}
        }
        let e = tighten(precision, |bits| {
            cf.enclose(bits).ok_or(Error::PrecisionExhausted)
        })?;
        if let Some(q) = e.as_exact() {
            return Ok(Self::rational(q.clone()));
        }
        Ok(Self {
            lower: Extended::Finite(e.lo().clone().max(Rational::one())),
            upper: Extended::Finite(e.hi().clone()),
            exact: true,
            closed_form: Some(cf),
        })
    }

    pub fn bounds(lower: Rational, upper: Extended) -> Self {
        let lower = lower.max(Rational::one());
        let exact = upper == Extended::Finite(lower.clone());
        let closed_form = exact.then(|| ClosedForm::Rational {
            value: lower.clone(),
        });
        Self {
            lower: Extended::Finite(lower),
            upper,
            exact,
            closed_form,
        }
    }

    pub fn unknown() -> Self {
        Self::bounds(Rational::one(), Extended::Infinite)
    }

    /// `upper` as a rational upper bound, `None` when unbounded.
    pub fn upper_rational(&self) -> Option<&Rational> {
        self.upper.finite()
    }

    /// Enclosure of the closed-form value at a given relative precision.
    pub fn enclose(&self, bits: u32) -> Option<Enclosure> {
        match &self.closed_form {
            Some(cf) => cf.enclose(bits),
            None => Some(Enclosure::new(
                self.lower.finite()?.clone(),
                self.upper.finite()?.clone(),
            )),
        }
    }
}

fn check_window(gamma: &Rational, m: &Rational) -> Result<()> {
    if !gamma.is_positive() {
        return Err(Error::Domain(format!(
            "gamma = {} must be positive",
            format_rational(gamma)
        )));
    }
    if m.is_negative() {
        return Err(Error::Domain(format!(
            "M = {} must be nonnegative",
            format_rational(m)
        )));
    }
    Ok(())
}

/// Points `x >= M` where `D⁺g(x)` is the slope of `s`: `[max(lo, M), hi)`.
fn right_window(s: &Segment, m: &Rational) -> Option<(Rational, Option<Rational>)> {
    let lo = s.lo.clone().max(m.clone());
    match &s.hi {
        Some(h) if h <= &lo => None,
        hi => Some((lo, hi.clone())),
    }
}

/// Points `y >= M` where `D⁻g(y)` is the slope of `s`: `(lo, hi]`, or
/// `[M, hi]` when the piece straddles `M`. The flag marks a closed left end.
fn left_window(s: &Segment, m: &Rational) -> Option<(Rational, bool, Option<Rational>)> {
    if s.hi.as_ref().is_some_and(|h| h < m) {
        return None;
    }
    if &s.lo >= m {
        Some((s.lo.clone(), false, s.hi.clone()))
    } else {
        Some((m.clone(), true, s.hi.clone()))
    }
}

/// Whether some `x` in `[xl, xh)` and `y` in the left window satisfy `|x − y| <= γ`.
fn windows_within(
    (xl, xh): &(Rational, Option<Rational>),
    (yl, _, yh): &(Rational, bool, Option<Rational>),
    gamma: &Rational,
) -> bool {
    if let Some(xh) = xh {
        if xh <= yl {
            // x < xh <= y: the infimum of y − x is not attained.
            return &(yl - xh) < gamma;
        }
    }
    if let Some(yh) = yh {
        if yh < xl {
            return &(xl - yh) <= gamma;
        }
    }
    true
}

fn pwa_lambda(p: &Pwa, gamma: &Rational, m: &Rational) -> LambdaEstimate {
    let base = m.clone().max(p.last_x().clone());
    let end = match p.period() {
        Some((_, width, _)) => &base + &width * int(2) + gamma,
        None => &base + gamma,
    };
    let (segs, _) = p.segments_until(&end);
    let rights: Vec<_> = segs.iter().map(|s| right_window(s, m)).collect();
    let lefts: Vec<_> = segs.iter().map(|s| left_window(s, m)).collect();
    let mut best = Rational::one();
    for (i, x) in rights.iter().enumerate() {
        let Some(x) = x else { continue };
        for (j, y) in lefts.iter().enumerate() {
            let Some(y) = y else { continue };
            let q = &segs[i].slope / &segs[j].slope;
            if q > best && windows_within(x, y, gamma) {
                best = q;
            }
        }
    }
    match p.tail() {
        PwaTail::Unknown => LambdaEstimate::bounds(best, Extended::Infinite),
        _ => LambdaEstimate::rational(best),
    }
}

fn sampled_lower(g: &AdmissibleFunction, gamma: &Rational, m: &Rational) -> Rational {
    let mut best = Rational::one();
    for k in 0..=8 {
        let x = m + gamma * Rational::new(k.into(), 4.into());
        let y = &x + gamma;
        for (u, v) in [(&x, &y), (&y, &x), (&x, &x)] {
            if let Some(q) = ratio_lower(g, u, v) {
                best = best.max(q);
            }
        }
    }
    best
}

fn upper_max(a: &Extended, b: &Extended) -> Extended {
    a.clone().max(b.clone())
}

fn pwa_sum(terms: &[(Rational, AdmissibleFunction)]) -> Option<Pwa> {
    let mut acc: Option<Pwa> = None;
    for (c, g) in terms {
        let p = g.as_pwa()?.scale(c).ok()?;
        acc = Some(match acc {
            None => p,
            Some(a) => a.add(&p).ok()?,
        });
    }
    acc
}

fn stretched_lambda(
    a: &Rational,
    b: &Rational,
    gamma: &Rational,
    m: &Rational,
    precision: u32,
) -> Result<LambdaEstimate> {
    match b.cmp(&Rational::one()) {
        std::cmp::Ordering::Equal => {
            return LambdaEstimate::closed(
                ClosedForm::ExpOf {
                    exponent: LogAffine::rational(a * gamma),
                },
                precision,
            )
        }
        std::cmp::Ordering::Greater => return Ok(LambdaEstimate::infinite()),
        std::cmp::Ordering::Less => {}
    }
    if m.is_zero() {
        return Ok(LambdaEstimate::infinite());
    }
    // log g' is concave past x** = (1/(ab))^{1/b}, so the window ratio is
    // largest at the left end there.
    let x_star = numeric::pow(
        &(Rational::one() / (a * b)),
        &(Rational::one() / b),
        DEFAULT_BITS,
    )?
    .hi()
    .clone();
    if m >= &x_star {
        return LambdaEstimate::closed(
            ClosedForm::StretchedWindow {
                a: a.clone(),
                b: b.clone(),
                gamma: gamma.clone(),
                m: m.clone(),
            },
            precision,
        );
    }
    // Below x**: pairs with both points in [M, x*+γ] are bounded by
    // sup g' / inf g' there; pairs starting at or beyond x* by the window value.
    let tail = stretched_window(a, b, gamma, &x_star, DEFAULT_BITS)?;
    let end = &x_star + gamma;
    let pieces = 64;
    let step = (&end - m) / int(pieces);
    let ab = a * b;
    let b1 = b - Rational::one();
    let mut sup = Rational::zero();
    let mut inf: Option<Rational> = None;
    for i in 0..pieces {
        let u = m + &step * int(i);
        let v = &u + &step;
        let hi = numeric::pow(&u, &b1, DEFAULT_BITS)?
            .mul(&numeric::exp_enclosure(
                &numeric::pow(&v, b, DEFAULT_BITS)?.scale(a),
                DEFAULT_BITS,
            ))
            .scale(&ab);
        let lo = numeric::pow(&v, &b1, DEFAULT_BITS)?
            .mul(&numeric::exp_enclosure(
                &numeric::pow(&u, b, DEFAULT_BITS)?.scale(a),
                DEFAULT_BITS,
            ))
            .scale(&ab);
        sup = sup.max(hi.hi().clone());
        inf = Some(match inf {
            None => lo.lo().clone(),
            Some(q) => q.min(lo.lo().clone()),
        });
    }
    let inf = inf.expect("pieces > 0");
    let upper = (sup / inf).max(tail.hi().clone());
    let g = AdmissibleFunction::StretchedExp {
        a: a.clone(),
        b: b.clone(),
    };
    Ok(LambdaEstimate::bounds(
        sampled_lower(&g, gamma, m),
        Extended::Finite(upper),
    ))
}

/// `Λ(g, γ, M)` with closed forms enclosed to absolute width `2^-precision`.
pub fn lambda(
    g: &AdmissibleFunction,
    gamma: &Rational,
    m: &Rational,
    precision: u32,
) -> Result<LambdaEstimate> {
    check_window(gamma, m)?;
    use AdmissibleFunction::*;
    match g {
        PiecewiseAffine(p) => Ok(pwa_lambda(p, gamma, m)),
        Power(e) => {
            if e.is_one() {
                return Ok(LambdaEstimate::rational(Rational::one()));
            }
            if m.is_zero() {
                return Ok(LambdaEstimate::infinite());
            }
            let base = (m + gamma) / m;
            let exponent = (e - Rational::one()).abs();
            if exponent.is_integer() {
                let n = exponent
                    .to_integer()
                    .try_into()
                    .map_err(|_| Error::Domain("exponent too large".into()))?;
                Ok(LambdaEstimate::rational(num_traits::pow(base, n)))
            } else {
                LambdaEstimate::closed(ClosedForm::Power { base, exponent }, precision)
            }
        }
        Exp(r) => LambdaEstimate::closed(
            ClosedForm::ExpOf {
                exponent: LogAffine::rational(r * gamma),
            },
            precision,
        ),
        StretchedExp { a, b } => stretched_lambda(a, b, gamma, m, precision),
        ScaledSum(terms) => {
            if terms.len() == 1 {
                return lambda(&terms[0].1, gamma, m, precision);
            }
            if let Some(p) = pwa_sum(terms) {
                return Ok(pwa_lambda(&p, gamma, m));
            }
            let mut upper = Extended::Finite(Rational::one());
            for (_, h) in terms {
                upper = upper_max(&upper, &lambda(h, gamma, m, precision)?.upper);
            }
            Ok(LambdaEstimate::bounds(sampled_lower(g, gamma, m), upper))
        }
        Product(pair) => {
            let (f, h) = (&pair.0, &pair.1);
            let lf = lambda(f, gamma, m, precision)?.upper;
            let lh = lambda(h, gamma, m, precision)?.upper;
            let rf = value_ratio(f, gamma, m)?;
            let rh = value_ratio(h, gamma, m)?;
            let upper = upper_max(&lf.mul(&rh), &rf.mul(&lh));
            Ok(LambdaEstimate::bounds(sampled_lower(g, gamma, m), upper))
        }
    }
}

fn pwa_value_ratio(p: &Pwa, gamma: &Rational, m: &Rational) -> Result<Extended> {
    if matches!(p.tail(), PwaTail::Unknown) {
        return Ok(Extended::Infinite);
    }
    if p.eval(m)?.is_zero() {
        return Ok(Extended::Infinite);
    }
    // g(y+γ)/g(y) is linear-fractional between consecutive breakpoints of
    // y and y+γ, so its sup over a stretch is attained at one of them.
    let base = m.clone().max(p.last_x().clone());
    let end = match p.period() {
        Some((_, width, _)) => &base + width,
        None => base.clone(),
    };
    let mut cands = vec![m.clone(), end.clone()];
    for x in p.breakpoints_until(&(&end + gamma)) {
        for c in [x.clone(), &x - gamma] {
            if &c >= m && c <= end {
                cands.push(c);
            }
        }
    }
    let mut best = Rational::one();
    for y in cands {
        let q = p.eval(&(&y + gamma))? / p.eval(&y)?;
        best = best.max(q);
    }
    Ok(Extended::Finite(best))
}

/// Upper bound for `sup_{y ≥ M} g(y+γ) / g(y)`.
pub fn value_ratio(g: &AdmissibleFunction, gamma: &Rational, m: &Rational) -> Result<Extended> {
    check_window(gamma, m)?;
    use AdmissibleFunction::*;
    let bits = DEFAULT_BITS;
    Ok(match g {
        PiecewiseAffine(p) => pwa_value_ratio(p, gamma, m)?,
        Power(e) => {
            if m.is_zero() {
                Extended::Infinite
            } else {
                Extended::Finite(numeric::pow(&((m + gamma) / m), e, bits)?.hi().clone())
            }
        }
        Exp(r) => Extended::Finite(numeric::exp(&(r * gamma), bits).hi().clone()),
        StretchedExp { a, b } => {
            if b > &Rational::one() {
                Extended::Infinite
            } else {
                let d = numeric::pow(&(m + gamma), b, bits)?
                    .sub(&numeric::pow(m, b, bits)?)
                    .scale(a);
                Extended::Finite(numeric::exp_enclosure(&d, bits).hi().clone())
            }
        }
        ScaledSum(terms) => {
            let mut best = Extended::Finite(Rational::one());
            for (_, h) in terms {
                best = upper_max(&best, &value_ratio(h, gamma, m)?);
            }
            best
        }
        Product(pair) => value_ratio(&pair.0, gamma, m)?.mul(&value_ratio(&pair.1, gamma, m)?),
    })
}

/// Upper bound for `lim_{M→∞} sup_{y ≥ M} g(y+γ) / g(y)`.
pub fn value_ratio_limit(g: &AdmissibleFunction, gamma: &Rational) -> Extended {
    use AdmissibleFunction::*;
    let bits = DEFAULT_BITS;
    match g {
        PiecewiseAffine(p) => match p.tail() {
            PwaTail::Unknown => Extended::Infinite,
            _ => Extended::Finite(Rational::one()),
        },
        Power(_) => Extended::Finite(Rational::one()),
        Exp(r) => Extended::Finite(numeric::exp(&(r * gamma), bits).hi().clone()),
        StretchedExp { a, b } => match b.cmp(&Rational::one()) {
            std::cmp::Ordering::Less => Extended::Finite(Rational::one()),
            std::cmp::Ordering::Equal => {
                Extended::Finite(numeric::exp(&(a * gamma), bits).hi().clone())
            }
            std::cmp::Ordering::Greater => Extended::Infinite,
        },
        ScaledSum(terms) => terms
            .iter()
            .map(|(_, h)| value_ratio_limit(h, gamma))
            .max()
            .unwrap_or(Extended::Finite(Rational::one())),
        Product(pair) => value_ratio_limit(&pair.0, gamma).mul(&value_ratio_limit(&pair.1, gamma)),
    }
}

/// `Λ(g, γ) = lim_{M→∞} Λ(g, γ, M)`.
pub fn lambda_limit(
    g: &AdmissibleFunction,
    gamma: &Rational,
    precision: u32,
) -> Result<LambdaEstimate> {
    check_window(gamma, &Rational::zero())?;
    use AdmissibleFunction::*;
    match g {
        PiecewiseAffine(p) => Ok(match p.tail() {
            PwaTail::FinalSlope(_) => LambdaEstimate::rational(Rational::one()),
            // Λ(·, γ, M) is nonincreasing in M and periodic once D⁻g(M) is
            // taken inside the pattern, hence constant from one period on.
            PwaTail::Periodic { .. } => {
                let (start, width, _) = p.period().expect("periodic");
                pwa_lambda(p, gamma, &(start + width))
            }
            PwaTail::Unknown => LambdaEstimate::unknown(),
        }),
        Power(_) => Ok(LambdaEstimate::rational(Rational::one())),
        Exp(r) => LambdaEstimate::closed(
            ClosedForm::ExpOf {
                exponent: LogAffine::rational(r * gamma),
            },
            precision,
        ),
        StretchedExp { a, b } => match b.cmp(&Rational::one()) {
            std::cmp::Ordering::Less => Ok(LambdaEstimate::rational(Rational::one())),
            std::cmp::Ordering::Equal => LambdaEstimate::closed(
                ClosedForm::ExpOf {
                    exponent: LogAffine::rational(a * gamma),
                },
                precision,
            ),
            std::cmp::Ordering::Greater => Ok(LambdaEstimate::infinite()),
        },
        ScaledSum(terms) => {
            if terms.len() == 1 {
                return lambda_limit(&terms[0].1, gamma, precision);
            }
            if let Some(p) = pwa_sum(terms) {
                return lambda_limit(&PiecewiseAffine(p), gamma, precision);
            }
            let mut upper = Extended::Finite(Rational::one());
            for (_, h) in terms {
                upper = upper_max(&upper, &lambda_limit(h, gamma, precision)?.upper);
            }
            Ok(LambdaEstimate::bounds(Rational::one(), upper))
        }
        Product(pair) => {
            let (f, h) = (&pair.0, &pair.1);
            let lf = lambda_limit(f, gamma, precision)?.upper;
            let lh = lambda_limit(h, gamma, precision)?.upper;
            let upper = upper_max(
                &lf.mul(&value_ratio_limit(h, gamma)),
                &value_ratio_limit(f, gamma).mul(&lh),
            );
            Ok(LambdaEstimate::bounds(Rational::one(), upper))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "TRV")]
    Trv,
    #[serde(rename = "BRV_not_TRV")]
    BrvNotTrv,
    #[serde(rename = "not_BRV")]
    NotBrv,
    #[serde(rename = "unknown")]
    Unknown,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Trv => "TRV",
            Classification::BrvNotTrv => "BRV_not_TRV",
            Classification::NotBrv => "not_BRV",
            Classification::Unknown => "unknown",
        })
    }
}

/// Class decided from `Λ(g, γ)` at the given window.
pub fn classify_at(g: &AdmissibleFunction, gamma: &Rational) -> Result<Classification> {
    let est = lambda_limit(g, gamma, DEFAULT_BITS)?;
    let one = Rational::one();
    Ok(match (&est.lower, &est.upper) {
        (_, Extended::Finite(u)) if u == &one => Classification::Trv,
        (Extended::Infinite, _) => Classification::NotBrv,
        (Extended::Finite(l), Extended::Finite(_)) if l > &one => Classification::BrvNotTrv,
        _ => Classification::Unknown,
    })
}

/// Class decided at `γ = 1`, which suffices for both TRV and BRV.
pub fn classify(g: &AdmissibleFunction) -> Result<Classification> {
    classify_at(g, &Rational::one())
}
