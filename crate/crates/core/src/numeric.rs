//! Certified enclosures for transcendental values.
//!
//! All values are closed rational intervals `[lo, hi]` that provably contain
//! the true real number. Intermediate results are rounded outward to dyadic
//! rationals with a given number of significant bits, so sizes stay bounded
//! while containment is preserved. `exp` uses argument halving, a Taylor sum
//! with an explicit tail bound, and repeated squaring; `ln 2` uses the series
//! `Σ 1/(k 2^k)`; rational powers use exact integer `n`-th roots.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, ParseError, Result};
use crate::rational::{format_rational, int, parse_rational, Rational};

/// Working precision used when a caller does not choose one.
pub const DEFAULT_BITS: u32 = 64;
/// Upper limit for adaptive refinement loops.
pub const MAX_BITS: u32 = 8192;

fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(BigInt::one() << (e as usize))
    } else {
        Rational::new(BigInt::one(), BigInt::one() << ((-e) as usize))
    }
}

/// `e` with `2^(e-1) <= |q| < 2^(e+1)`; only used to size roundings.
fn approx_log2(q: &Rational) -> i64 {
    q.numer().bits() as i64 - q.denom().bits() as i64
}

fn floor_scaled(q: &Rational, shift: i64) -> BigInt {
    if shift >= 0 {
        (q.numer() << (shift as usize)).div_floor(q.denom())
    } else {
        q.numer().div_floor(&(q.denom() << ((-shift) as usize)))
    }
}

fn from_scaled(k: BigInt, shift: i64) -> Rational {
    if shift >= 0 {
        Rational::new(k, BigInt::one() << (shift as usize))
    } else {
        Rational::from_integer(k << ((-shift) as usize))
    }
}

/// Largest dyadic with about `bits` significant bits that is `<= q`.
pub fn round_down(q: &Rational, bits: u32) -> Rational {
    if q.is_zero() || q.denom().is_one() && q.numer().bits() <= bits as u64 {
        return q.clone();
    }
    let shift = bits as i64 - approx_log2(q);
    from_scaled(floor_scaled(q, shift), shift)
}

/// Smallest dyadic with about `bits` significant bits that is `>= q`.
pub fn round_up(q: &Rational, bits: u32) -> Rational {
    -round_down(&-q, bits)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: Rational,
    hi: Rational,
}

impl Enclosure {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "enclosure bounds out of order");
        Self { lo, hi }
    }

    pub fn exact(q: Rational) -> Self {
        Self {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn round_out(&self, bits: u32) -> Self {
        Self {
            lo: round_down(&self.lo, bits),
            hi: round_up(&self.hi, bits),
        }
    }

    pub fn add(&self, o: &Enclosure) -> Self {
        Self {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Enclosure) -> Self {
        Self {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_negative() {
            Self {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Self {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    pub fn mul(&self, o: &Enclosure) -> Self {
        if !self.lo.is_negative() && !o.lo.is_negative() {
            return Self {
                lo: &self.lo * &o.lo,
                hi: &self.hi * &o.hi,
            };
        }
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Self { lo, hi }
    }

    /// Reciprocal, rounded outward. Fails when the enclosure contains zero.
    pub fn recip(&self, bits: u32) -> Result<Self> {
        if !self.lo.is_positive() && !self.hi.is_negative() {
            return Err(Error::Domain(
                "reciprocal of an enclosure containing zero".into(),
            ));
        }
        let lo = Rational::one() / &self.hi;
        let hi = Rational::one() / &self.lo;
        Ok(Self {
            lo: round_down(&lo, bits),
            hi: round_up(&hi, bits),
        })
    }

    pub fn div(&self, o: &Enclosure, bits: u32) -> Result<Self> {
        if let (Some(a), Some(b)) = (self.as_exact(), o.as_exact()) {
            if b.is_zero() {
                return Err(Error::Domain("division by zero".into()));
            }
            return Ok(Self::exact(a / b));
        }
        Ok(self.mul(&o.recip(bits + 8)?).round_out(bits))
    }

    /// Integer power of a nonnegative enclosure.
    pub fn powi(&self, n: u32, bits: u32) -> Self {
        debug_assert!(!self.lo.is_negative());
        if self.is_exact() && n <= 64 {
            return Self::exact(num_traits::pow(self.lo.clone(), n as usize));
        }
        let mut base = self.clone();
        let mut acc = Self::exact(Rational::one());
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).round_out(bits);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).round_out(bits);
            }
        }
        acc
    }

    /// Componentwise maximum: encloses `max(x, y)` for `x ∈ self`, `y ∈ o`.
    pub fn max(&self, o: &Enclosure) -> Self {
        Self {
            lo: self.lo.clone().max(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    pub fn min(&self, o: &Enclosure) -> Self {
        Self {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().min(o.hi.clone()),
        }
    }

    pub fn hull(&self, o: &Enclosure) -> Self {
        Self {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }

    /// Ordering of the enclosed values when the enclosures decide it.
    pub fn certain_cmp(&self, o: &Enclosure) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else if self.is_exact() && o.is_exact() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// `x >= y` is certain for every `x ∈ self`, `y ∈ o`.
    pub fn certainly_ge(&self, o: &Enclosure) -> bool {
        self.lo >= o.hi
    }

    pub fn certainly_gt(&self, o: &Enclosure) -> bool {
        self.lo > o.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        crate::rational::to_f64(&((&self.lo + &self.hi) / int(2)))
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            f.write_str(&format_rational(&self.lo))
        } else {
            write!(
                f,
                "[{}, {}]",
                format_rational(&self.lo),
                format_rational(&self.hi)
            )
        }
    }
}

/// Runs `f` at doubling precision until it yields a value or the cap is hit.
pub fn refine<T>(start_bits: u32, mut f: impl FnMut(u32) -> Option<T>) -> Option<T> {
    let mut bits = start_bits.max(16);
    loop {
        if let Some(v) = f(bits) {
            return Some(v);
        }
        if bits >= MAX_BITS {
            return None;
        }
        bits = (bits * 2).min(MAX_BITS);
    }
}

/// Recomputes `f` until its width is at most `2^-abs_bits`.
pub fn tighten(abs_bits: u32, mut f: impl FnMut(u32) -> Result<Enclosure>) -> Result<Enclosure> {
    let target = pow2(-(abs_bits as i64));
    let mut bits = abs_bits + 16;
    loop {
        let e = f(bits)?;
        let w = e.width();
        if w <= target {
            return Ok(e);
        }
        if bits >= MAX_BITS {
            return Err(Error::PrecisionExhausted);
        }
        let excess = (approx_log2(&w) + abs_bits as i64 + 8).max(8) as u32;
        bits = (bits + excess).max(bits * 3 / 2).min(MAX_BITS);
    }
}

/// Lower and upper bounds for `e^y · 2^w`, given `y · 2^w` in `[y_lo, y_hi]`
/// with `0 <= y <= 1/2`. Fixed-point Taylor sums with directed truncation.
fn exp_taylor_fixed(y_lo: &BigInt, y_hi: &BigInt, w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << (w as usize);
    let mut lo = one.clone();
    let mut t = one.clone();
    let mut k = 1u32;
    loop {
        t = (&t * y_lo).div_floor(&(BigInt::from(k) << (w as usize)));
        if t.is_zero() {
            break;
        }
        lo += &t;
        k += 1;
    }
    let mut hi = one.clone();
    let mut t = one;
    let mut k = 1u32;
    loop {
        t = (&t * y_hi).div_ceil(&(BigInt::from(k) << (w as usize)));
        hi += &t;
        // Once terms are at most one unit, the rest is below twice the next one.
        if t <= BigInt::one() {
            hi += BigInt::from(2);
            break;
        }
        k += 1;
    }
    (lo, hi)
}

fn exp_nonneg(x: &Rational, bits: u32) -> Enclosure {
    if x.is_zero() {
        return Enclosure::exact(Rational::one());
    }
    let halvings = (approx_log2(x) + 2).max(0);
    let w = bits + halvings as u32 + 24;
    let shift = w as i64 - halvings;
    let y_lo = floor_scaled(x, shift);
    let y_hi = -floor_scaled(&-x, shift);
    let (mut lo, mut hi) = exp_taylor_fixed(&y_lo, &y_hi, w);
    let unit = BigInt::one() << (w as usize);
    for _ in 0..halvings {
        lo = (&lo * &lo).div_floor(&unit);
        hi = (&hi * &hi).div_ceil(&unit);
    }
    Enclosure {
        lo: round_down(&from_scaled(lo, w as i64), bits + 4),
        hi: round_up(&from_scaled(hi, w as i64), bits + 4),
    }
}

/// Enclosure of `e^x` with about `bits` significant bits.
pub fn exp(x: &Rational, bits: u32) -> Enclosure {
    if x.is_negative() {
        let e = exp_nonneg(&-x, bits + 4);
        e.recip(bits + 4).expect("exp is positive")
    } else {
        exp_nonneg(x, bits)
    }
}

/// Enclosure of `e^x` for every `x` in the given enclosure.
pub fn exp_enclosure(x: &Enclosure, bits: u32) -> Enclosure {
    if let Some(q) = x.as_exact() {
        return exp(q, bits);
    }
    Enclosure {
        lo: exp(&x.lo, bits).lo,
        hi: exp(&x.hi, bits).hi,
    }
}

fn ln2_series(bits: u32) -> Enclosure {
    let w = bits as usize + 16;
    let terms = w;
    let unit = BigInt::one() << w;
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for k in 1..=terms {
        let d = BigInt::from(k) << k;
        lo += unit.div_floor(&d);
        hi += unit.div_ceil(&d);
    }
    // Σ_{k>K} 1/(k 2^k) <= 1/((K+1) 2^K) < one unit.
    hi += 1;
    Enclosure {
        lo: round_down(&from_scaled(lo, w as i64), bits + 4),
        hi: round_up(&from_scaled(hi, w as i64), bits + 4),
    }
}

const LN2_CACHE_BITS: u32 = 2048;

/// Enclosure of `ln 2`.
pub fn ln2(bits: u32) -> Enclosure {
    static CACHE: OnceLock<Enclosure> = OnceLock::new();
    if bits <= LN2_CACHE_BITS {
        CACHE
            .get_or_init(|| ln2_series(LN2_CACHE_BITS))
            .round_out(bits + 4)
    } else {
        ln2_series(bits)
    }
}

/// Enclosure of `x^(1/n)` for `x >= 0`.
pub fn nth_root(x: &Rational, n: u32, bits: u32) -> Enclosure {
    assert!(!x.is_negative(), "root of a negative number");
    if x.is_zero() || n == 1 {
        return Enclosure::exact(x.clone());
    }
    let shift = bits as i64 + 2 - approx_log2(x) / n as i64;
    let scaled_shift = shift * n as i64;
    let floor = floor_scaled(x, scaled_shift);
    let ceil = -floor_scaled(&-x, scaled_shift);
    let r_lo = floor.nth_root(n);
    let r = ceil.nth_root(n);
    let r_hi = if num_traits::pow(r.clone(), n as usize) == ceil {
        r
    } else {
        r + 1
    };
    Enclosure::new(from_scaled(r_lo, shift), from_scaled(r_hi, shift))
}

/// Enclosure of `x^m` for rational `m` and `x >= 0`.
pub fn pow(x: &Rational, m: &Rational, bits: u32) -> Result<Enclosure> {
    if x.is_negative() {
        return Err(Error::Domain(format!(
            "power of negative base {}",
            format_rational(x)
        )));
    }
    if m.is_zero() {
        return Ok(Enclosure::exact(Rational::one()));
    }
    if x.is_zero() {
        return if m.is_positive() {
            Ok(Enclosure::exact(Rational::zero()))
        } else {
            Err(Error::Domain("negative power of zero".into()))
        };
    }
    let p = m
        .numer()
        .abs()
        .to_u32()
        .ok_or_else(|| Error::Domain("exponent too large".into()))?;
    let q = m
        .denom()
        .to_u32()
        .ok_or_else(|| Error::Domain("exponent denominator too large".into()))?;
    let w = bits + 32 - p.leading_zeros().min(31);
    let base = if q == 1 {
        Enclosure::exact(x.clone())
    } else {
        nth_root(x, q, w)
    };
    let pos = base.powi(p, w);
    let out = if m.is_negative() { pos.recip(w)? } else { pos };
    Ok(if out.is_exact() {
        out
    } else {
        out.round_out(bits + 4)
    })
}

/// Enclosure of `x^m` over an enclosure of `x >= 0`.
pub fn pow_enclosure(x: &Enclosure, m: &Rational, bits: u32) -> Result<Enclosure> {
    if let Some(q) = x.as_exact() {
        return pow(q, m, bits);
    }
    let a = pow(&x.lo, m, bits)?;
    let b = pow(&x.hi, m, bits)?;
    Ok(if m.is_negative() {
        Enclosure { lo: b.lo, hi: a.hi }
    } else {
        Enclosure { lo: a.lo, hi: b.hi }
    })
}

/// A real number `rat + coeff · ln 2` with rational parts.
///
/// Exponents of the form `r·x` meet `ln 2` at the phase boundary `e^{ra} = 2`;
/// keeping the `ln 2` coefficient symbolic lets that boundary be decided exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogAffine {
    pub rat: Rational,
    pub ln2: Rational,
}

impl LogAffine {
    pub fn rational(q: Rational) -> Self {
        Self {
            rat: q,
            ln2: Rational::zero(),
        }
    }

    pub fn ln2_multiple(c: Rational) -> Self {
        Self {
            rat: Rational::zero(),
            ln2: c,
        }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.ln2.is_zero().then_some(&self.rat)
    }

    pub fn add(&self, o: &LogAffine) -> Self {
        Self {
            rat: &self.rat + &o.rat,
            ln2: &self.ln2 + &o.ln2,
        }
    }

    pub fn sub(&self, o: &LogAffine) -> Self {
        Self {
            rat: &self.rat - &o.rat,
            ln2: &self.ln2 - &o.ln2,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            rat: &self.rat * c,
            ln2: &self.ln2 * c,
        }
    }

    pub fn enclosure(&self, bits: u32) -> Enclosure {
        if self.ln2.is_zero() {
            return Enclosure::exact(self.rat.clone());
        }
        ln2(bits + 8)
            .scale(&self.ln2)
            .add(&Enclosure::exact(self.rat.clone()))
            .round_out(bits + 4)
    }

    /// Sign of the value; `None` only if refinement hits the precision cap.
    pub fn sign(&self) -> Option<Ordering> {
        let zero = Rational::zero();
        let a = self.rat.cmp(&zero);
        let b = self.ln2.cmp(&zero);
        if b == Ordering::Equal || a == b {
            return Some(a);
        }
        if a == Ordering::Equal {
            return Some(b);
        }
        // ln 2 is irrational, so a nonzero rational part never cancels it exactly.
        refine(DEFAULT_BITS, |bits| {
            self.enclosure(bits)
                .certain_cmp(&Enclosure::exact(zero.clone()))
        })
    }

    pub fn cmp_value(&self, o: &LogAffine) -> Option<Ordering> {
        self.sub(o).sign()
    }

    /// Enclosure of `e^self`; exact when the value is `n ln 2` for integer `n`.
    pub fn exp(&self, bits: u32) -> Enclosure {
        if self.ln2.is_integer() {
            let n = self
                .ln2
                .to_integer()
                .to_i64()
                .expect("ln2 coefficient fits in i64");
            let base = if self.rat.is_zero() {
                Enclosure::exact(Rational::one())
            } else {
                exp(&self.rat, bits)
            };
            return base.scale(&pow2(n));
        }
        exp_enclosure(&self.enclosure(bits + 16), bits)
    }
}

impl fmt::Display for LogAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeff = |c: &Rational| {
            if c.is_one() {
                "ln2".to_string()
            } else {
                format!("{}*ln2", format_rational(c))
            }
        };
        match (self.rat.is_zero(), self.ln2.is_zero()) {
            (_, true) => f.write_str(&format_rational(&self.rat)),
            (true, false) => f.write_str(&coeff(&self.ln2)),
            (false, false) => {
                let sign = if self.ln2.is_negative() { '-' } else { '+' };
                write!(
                    f,
                    "{}{}{}",
                    format_rational(&self.rat),
                    sign,
                    coeff(&self.ln2.abs())
                )
            }
        }
    }
}

impl FromStr for LogAffine {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = || ParseError::LogAffine(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let parse_ln2_term = |term: &str| -> std::result::Result<Rational, ParseError> {
            let c = term.strip_suffix("ln2").ok_or_else(err)?;
            let c = c.strip_suffix('*').unwrap_or(c);
            match c {
                "" | "+" => Ok(Rational::one()),
                "-" => Ok(-Rational::one()),
                other => parse_rational(other).map_err(|_| err()),
            }
        };
        if !t.ends_with("ln2") {
            return parse_rational(&t)
                .map(LogAffine::rational)
                .map_err(|_| err());
        }
        // split "<rat>+<c>ln2" at the last sign not at position zero and not after 'e'
        let bytes = t.as_bytes();
        let split = (1..t.len()).rev().find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-')
                && bytes[i - 1] != b'e'
                && bytes[i - 1] != b'E'
                && bytes[i - 1] != b'/'
        });
        match split {
            Some(i) if !t[..i].ends_with('*') => {
                let rat = parse_rational(&t[..i]).map_err(|_| err())?;
                let ln2 = parse_ln2_term(&t[i..])?;
                Ok(LogAffine { rat, ln2 })
            }
            _ => Ok(LogAffine::ln2_multiple(parse_ln2_term(&t)?)),
        }
    }
}

impl serde::Serialize for LogAffine {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for LogAffine {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn f(q: &Rational) -> f64 {
        crate::rational::to_f64(q)
    }

    #[test]
    fn directed_rounding_brackets() {
        let q = ratio(1, 3);
        let d = round_down(&q, 20);
        let u = round_up(&q, 20);
        assert!(d <= q && q <= u);
        assert!(&u - &d <= pow2(-19));
        let n = ratio(-22, 7);
        assert!(round_down(&n, 10) <= n && n <= round_up(&n, 10));
        assert_eq!(round_down(&int(5), 10), int(5));
    }

    #[test]
    fn exp_encloses_reference_values() {
        for (x, want) in [
            (int(0), 1.0f64),
            (int(1), std::f64::consts::E),
            (ratio(-3, 2), (-1.5f64).exp()),
            (int(20), 20f64.exp()),
        ] {
            let e = exp(&x, 80);
            assert!(
                f(e.lo()) <= want * (1.0 + 1e-15) && want * (1.0 - 1e-15) <= f(e.hi()),
                "{x}"
            );
            assert!(f(&e.width()) <= want * 1e-20);
        }
        assert_eq!(exp(&int(0), 64), Enclosure::exact(int(1)));
    }

    #[test]
    fn exp_of_large_argument_has_relative_precision() {
        let e = exp(&int(1560), 64);
        let rel = &e.width() / e.lo();
        assert!(rel < pow2(-60));
    }

    #[test]
    fn ln2_and_exp_agree() {
        let l = ln2(100);
        assert!(f(l.lo()) <= std::f64::consts::LN_2 && std::f64::consts::LN_2 <= f(l.hi()));
        let two = exp_enclosure(&l, 100);
        assert!(two.contains(&int(2)));
    }

    #[test]
    fn roots_and_powers() {
        let r = nth_root(&int(2), 2, 64);
        assert!(&(r.lo() * r.lo()) <= &int(2) && &int(2) <= &(r.hi() * r.hi()));
        assert!(r.width() <= pow2(-60));
        assert_eq!(nth_root(&int(27), 3, 30), Enclosure::new(int(3), int(3)));
        assert_eq!(pow(&int(3), &int(2), 64).unwrap(), Enclosure::exact(int(9)));
        let p = pow(&int(8), &ratio(-2, 3), 64).unwrap();
        assert!(p.contains(&ratio(1, 4)));
        assert!(pow(&int(0), &int(-1), 64).is_err());
    }

    #[test]
    fn log_affine_sign_and_exp() {
        let ra = LogAffine::rational(ratio(7, 10));
        assert_eq!(
            ra.cmp_value(&LogAffine::ln2_multiple(int(1))),
            Some(Ordering::Greater)
        );
        let ra = LogAffine::rational(ratio(69, 100));
        assert_eq!(
            ra.cmp_value(&LogAffine::ln2_multiple(int(1))),
            Some(Ordering::Less)
        );
        let boundary = LogAffine::ln2_multiple(int(1));
        assert_eq!(
            boundary.cmp_value(&LogAffine::ln2_multiple(int(1))),
            Some(Ordering::Equal)
        );
        assert_eq!(boundary.exp(64), Enclosure::exact(int(2)));
        let half = LogAffine::ln2_multiple(ratio(1, 2));
        let sqrt2 = half.exp(64);
        assert!(sqrt2.lo() * sqrt2.lo() <= int(2) && int(2) <= sqrt2.hi() * sqrt2.hi());
    }

    #[test]
    fn log_affine_text_forms() {
        for s in ["3/2", "ln2", "2*ln2", "1/2+3*ln2", "-1-1/2*ln2", "-ln2"] {
            let v: LogAffine = s.parse().unwrap();
            let again: LogAffine = v.to_string().parse().unwrap();
            assert_eq!(v, again, "{s}");
        }
        assert_eq!(
            "ln2".parse::<LogAffine>().unwrap(),
            LogAffine::ln2_multiple(int(1))
        );
        assert_eq!(
            "1/2*ln2".parse::<LogAffine>().unwrap(),
            LogAffine::ln2_multiple(ratio(1, 2))
        );
        assert!("foo".parse::<LogAffine>().is_err());
    }
}
