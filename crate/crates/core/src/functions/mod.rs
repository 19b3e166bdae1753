//! Admissible functions: continuous, strictly increasing maps of `[0, ∞)`
//! onto an unbounded range, given either as piecewise-affine data or as one
//! of a few symbolic families and their positive combinations.
//!
//! Piecewise-affine data and integer powers evaluate exactly. Everything else
//! returns an outward-rounded [`Enclosure`].

mod construct;
mod lambda;
mod pwa;

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::numeric::{self, tighten, Enclosure, DEFAULT_BITS};
use crate::rational::{format_rational, Rational};

pub use construct::{construct_non_brv, exponential_bound, ExponentialBound};
pub use lambda::{
    classify, classify_at, lambda, lambda_limit, value_ratio, value_ratio_limit, Classification,
    ClosedForm, LambdaEstimate,
};
pub use pwa::{secant, Pwa, PwaTail, Segment};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AdmissibleFunction {
    PiecewiseAffine(Pwa),
    /// `x^m`, `m > 0`.
    Power(Rational),
    /// `e^{a x^b}`, `a, b > 0`.
    StretchedExp {
        a: Rational,
        b: Rational,
    },
    /// `e^{r x}`, `r > 0`.
    Exp(Rational),
    /// `Σ c_i g_i` with every `c_i > 0`.
    ScaledSum(Vec<(Rational, AdmissibleFunction)>),
    Product(Box<(AdmissibleFunction, AdmissibleFunction)>),
}

fn positive(q: &Rational, what: &str) -> Result<()> {
    if q.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidFunction(format!(
            "{what} must be positive, got {}",
            format_rational(q)
        )))
    }
}

impl AdmissibleFunction {
    pub fn power(m: Rational) -> Result<Self> {
        positive(&m, "power exponent")?;
        Ok(Self::Power(m))
    }

    pub fn exp(r: Rational) -> Result<Self> {
        positive(&r, "exponential rate")?;
        Ok(Self::Exp(r))
    }

    pub fn stretched_exp(a: Rational, b: Rational) -> Result<Self> {
        positive(&a, "stretched exponential coefficient")?;
        positive(&b, "stretched exponential power")?;
        Ok(Self::StretchedExp { a, b })
    }

    pub fn scaled_sum(terms: Vec<(Rational, AdmissibleFunction)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidFunction(
                "a sum needs at least one term".into(),
            ));
        }
        for (c, _) in &terms {
            positive(c, "sum coefficient")?;
        }
        Ok(Self::ScaledSum(terms))
    }

    pub fn product(f: AdmissibleFunction, g: AdmissibleFunction) -> Self {
        Self::Product(Box::new((f, g)))
    }

    pub fn identity() -> Self {
        Self::PiecewiseAffine(Pwa::identity())
    }

    /// Re-checks the parameter constraints of every node.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PiecewiseAffine(p) => Pwa::new(p.points().to_vec(), p.tail().clone()).map(|_| ()),
            Self::Power(m) => positive(m, "power exponent"),
            Self::Exp(r) => positive(r, "exponential rate"),
            Self::StretchedExp { a, b } => positive(a, "coefficient").and(positive(b, "power")),
            Self::ScaledSum(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidFunction(
                        "a sum needs at least one term".into(),
                    ));
                }
                terms
                    .iter()
                    .try_for_each(|(c, g)| positive(c, "sum coefficient").and(g.validate()))
            }
            Self::Product(pair) => pair.0.validate().and(pair.1.validate()),
        }
    }

    pub fn as_pwa(&self) -> Option<&Pwa> {
        match self {
            Self::PiecewiseAffine(p) => Some(p),
            _ => None,
        }
    }

    pub fn exp_rate(&self) -> Option<&Rational> {
        match self {
            Self::Exp(r) => Some(r),
            _ => None,
        }
    }

    /// Values at rational points are rational.
    pub fn is_exact(&self) -> bool {
        match self {
            Self::PiecewiseAffine(_) => true,
            Self::Power(m) => m.is_integer(),
            Self::ScaledSum(t) => t.iter().all(|(_, g)| g.is_exact()),
            Self::Product(p) => p.0.is_exact() && p.1.is_exact(),
            Self::Exp(_) | Self::StretchedExp { .. } => false,
        }
    }

    /// Eventually affine: the tail is a single affine piece.
    pub fn affine_from(&self) -> Option<Rational> {
        match self {
            Self::PiecewiseAffine(p) => match p.tail() {
                PwaTail::FinalSlope(_) => Some(p.last_x().clone()),
                _ => None,
            },
            Self::Power(m) if m.is_one() => Some(Rational::zero()),
            _ => None,
        }
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

fn check_domain(x: &Rational) -> Result<()> {
    if x.is_negative() {
        Err(Error::Domain(format!(
            "x = {} is outside [0, inf)",
            format_rational(x)
        )))
    } else {
        Ok(())
    }
}

/// Enclosure of `g(x)` with roughly `bits` relative bits.
pub fn eval_bits(g: &AdmissibleFunction, x: &Rational, bits: u32) -> Result<Enclosure> {
    check_domain(x)?;
    use AdmissibleFunction::*;
    Ok(match g {
        PiecewiseAffine(p) => Enclosure::exact(p.eval(x)?),
        Power(m) => numeric::pow(x, m, bits)?,
        Exp(r) => numeric::exp(&(r * x), bits),
        StretchedExp { a, b } => {
            let xb = numeric::pow(x, b, bits + 8)?.scale(a);
            numeric::exp_enclosure(&xb, bits)
        }
        ScaledSum(terms) => {
            let mut acc = Enclosure::exact(Rational::zero());
            for (c, h) in terms {
                acc = acc.add(&eval_bits(h, x, bits + 4)?.scale(c));
            }
            acc
        }
        Product(pair) => eval_bits(&pair.0, x, bits + 4)?.mul(&eval_bits(&pair.1, x, bits + 4)?),
    })
}

/// Enclosure of `g(x)` of absolute width at most `2^-precision`.
pub fn eval(g: &AdmissibleFunction, x: &Rational, precision: u32) -> Result<Enclosure> {
    check_domain(x)?;
    tighten(precision, |bits| eval_bits(g, x, bits))
}

/// Exact value; fails when `g(x)` is not a rational number this crate can certify.
pub fn eval_exact(g: &AdmissibleFunction, x: &Rational) -> Result<Rational> {
    let e = eval_bits(g, x, DEFAULT_BITS)?;
    e.as_exact().cloned().ok_or_else(|| {
        Error::Domain(format!(
            "g({}) is not exactly representable",
            format_rational(x)
        ))
    })
}

/// One-sided derivative enclosures `(left, right)`; `left` is absent at 0.
pub fn one_sided_derivatives(
    g: &AdmissibleFunction,
    x: &Rational,
    bits: u32,
) -> Result<(Option<Enclosure>, Enclosure)> {
    check_domain(x)?;
    use AdmissibleFunction::*;
    let at_zero = x.is_zero();
    let both = |d: Enclosure| (if at_zero { None } else { Some(d.clone()) }, d);
    let infinite = || Error::InfiniteDerivative(format_rational(x));
    Ok(match g {
        PiecewiseAffine(p) => {
            let (l, r) = p.slopes_at(x)?;
            (l.map(Enclosure::exact), Enclosure::exact(r))
        }
        Power(m) => {
            if at_zero {
                match m.cmp(&Rational::one()) {
                    std::cmp::Ordering::Less => return Err(infinite()),
                    std::cmp::Ordering::Equal => both(Enclosure::exact(Rational::one())),
                    std::cmp::Ordering::Greater => both(Enclosure::exact(Rational::zero())),
                }
            } else {
                both(numeric::pow(x, &(m - Rational::one()), bits + 4)?.scale(m))
            }
        }
        Exp(r) => both(numeric::exp(&(r * x), bits).scale(r)),
        StretchedExp { a, b } => {
            if at_zero {
                match b.cmp(&Rational::one()) {
                    std::cmp::Ordering::Less => return Err(infinite()),
                    std::cmp::Ordering::Equal => both(Enclosure::exact(a.clone())),
                    std::cmp::Ordering::Greater => both(Enclosure::exact(Rational::zero())),
                }
            } else {
                let value = eval_bits(g, x, bits + 4)?;
                let xb1 = numeric::pow(x, &(b - Rational::one()), bits + 4)?;
                both(value.mul(&xb1).scale(&(a * b)).round_out(bits + 4))
            }
        }
        ScaledSum(terms) => {
            let mut left = Some(Enclosure::exact(Rational::zero()));
            let mut right = Enclosure::exact(Rational::zero());
            for (c, h) in terms {
                let (l, r) = one_sided_derivatives(h, x, bits)?;
                left = left.zip(l).map(|(acc, l)| acc.add(&l.scale(c)));
                right = right.add(&r.scale(c));
            }
            (left, right)
        }
        Product(pair) => {
            let (f, h) = (&pair.0, &pair.1);
            let fv = eval_bits(f, x, bits + 4)?;
            let hv = eval_bits(h, x, bits + 4)?;
            let (fl, fr) = one_sided_derivatives(f, x, bits)?;
            let (hl, hr) = one_sided_derivatives(h, x, bits)?;
            let leibniz = |df: &Enclosure, dh: &Enclosure| df.mul(&hv).add(&fv.mul(dh));
            let left = fl.zip(hl).map(|(a, b)| leibniz(&a, &b));
            (left, leibniz(&fr, &hr))
        }
    })
}

/// `(D⁺ g(x), D⁻ g(x))`: the larger and smaller one-sided derivative.
pub fn upper_lower_derivative(
    g: &AdmissibleFunction,
    x: &Rational,
    bits: u32,
) -> Result<(Enclosure, Enclosure)> {
    let (l, r) = one_sided_derivatives(g, x, bits)?;
    Ok(match l {
        Some(l) => (l.max(&r), l.min(&r)),
        None => (r.clone(), r),
    })
}

/// Image of a set under an increasing function, as enclosures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageEnclosure {
    /// Contains the true image.
    pub outer: IntervalUnion,
    /// Contained in the true image; absent when every part collapses.
    pub inner: Option<IntervalUnion>,
    pub exact: bool,
}

/// `g[K]` part by part: `[a, b] ↦ [g(a), g(b)]`.
pub fn apply_to_set(
    g: &AdmissibleFunction,
    k: &IntervalUnion,
    precision: u32,
) -> Result<ImageEnclosure> {
    let mut outer = Vec::with_capacity(k.parts().len());
    let mut inner = Vec::with_capacity(k.parts().len());
    let mut exact = true;
    for p in k.parts() {
        let lo = eval(g, p.lo(), precision)?;
        let hi = if p.lo() == p.hi() {
            lo.clone()
        } else {
            eval(g, p.hi(), precision)?
        };
        exact &= lo.is_exact() && hi.is_exact();
        outer.push(Interval::new(lo.lo().clone(), hi.hi().clone())?);
        if lo.is_exact() && hi.is_exact() {
            inner.push(Interval::new(lo.lo().clone(), hi.hi().clone())?);
        } else if lo.hi() <= hi.lo() && p.lo() != p.hi() {
            inner.push(Interval::new(lo.hi().clone(), hi.lo().clone())?);
        }
    }
    let outer = IntervalUnion::normalize(outer)?;
    let inner = if inner.is_empty() {
        None
    } else {
        Some(IntervalUnion::normalize(inner)?)
    };
    Ok(ImageEnclosure {
        outer,
        inner,
        exact,
    })
}

/// Exact image for functions that are rational on rational points.
pub fn exact_image(g: &AdmissibleFunction, k: &IntervalUnion) -> Result<IntervalUnion> {
    if let Some(p) = g.as_pwa() {
        return p.image(k);
    }
    let img = apply_to_set(g, k, DEFAULT_BITS)?;
    if img.exact {
        Ok(img.outer)
    } else {
        Err(Error::Domain("image is not exactly representable".into()))
    }
}

/// Derivative sample used by lower bounds: `D⁺(x) / D⁻(y)` from below.
pub(crate) fn ratio_lower(g: &AdmissibleFunction, x: &Rational, y: &Rational) -> Option<Rational> {
    let (dp, _) = upper_lower_derivative(g, x, DEFAULT_BITS).ok()?;
    let (_, dm) = upper_lower_derivative(g, y, DEFAULT_BITS).ok()?;
    if dm.hi().is_positive() {
        Some(dp.lo() / dm.hi())
    } else {
        None
    }
}
