//! Closed intervals and finite unions of them with exact rational endpoints.
//!
//! An [`IntervalUnion`] is always canonical: parts are sorted, pairwise
//! disjoint, and separated by gaps of positive length. Touching or overlapping
//! inputs are merged by [`IntervalUnion::normalize`]. Degenerate point parts are
//! allowed.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval {
                lo: format_rational(&lo),
                hi: format_rational(&hi),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Interval sum `[a,b] + [c,d] = [a+c, b+d]`.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn translate(&self, by: &Rational) -> Interval {
        Interval {
            lo: &self.lo + by,
            hi: &self.hi + by,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}]",
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format_rational(&self.lo), format_rational(&self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo = parse_rational(&lo).map_err(serde::de::Error::custom)?;
        let hi = parse_rational(&hi).map_err(serde::de::Error::custom)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching intervals.
    pub fn normalize(mut raw: Vec<Interval>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptySet);
        }
        raw.sort_unstable_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut parts: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match parts.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => parts.push(iv),
            }
        }
        Ok(Self { parts })
    }

    /// Builds from `(lo, hi)` pairs, normalizing.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let raw = pairs
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::normalize(raw)
    }

    /// Accepts parts only if they are already canonical.
    pub fn from_canonical(parts: Vec<Interval>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptySet);
        }
        for (i, w) in parts.windows(2).enumerate() {
            if w[0].hi >= w[1].lo {
                return Err(Error::NotCanonical { index: i + 1 });
            }
        }
        Ok(Self { parts })
    }

    pub fn interval(iv: Interval) -> Self {
        Self { parts: vec![iv] }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Interval> {
        self.parts
    }

    pub fn min(&self) -> &Rational {
        &self.parts[0].lo
    }

    pub fn max(&self) -> &Rational {
        &self.parts[self.parts.len() - 1].hi
    }

    pub fn hull(&self) -> Interval {
        Interval {
            lo: self.min().clone(),
            hi: self.max().clone(),
        }
    }

    pub fn diam(&self) -> Rational {
        self.max() - self.min()
    }

    pub fn is_interval(&self) -> bool {
        self.parts.len() == 1
    }

    /// Bounded gaps, left to right, as closed endpoint pairs of the open gaps.
    pub fn gaps(&self) -> Vec<Interval> {
        self.parts
            .windows(2)
            .map(|w| Interval {
                lo: w[0].hi.clone(),
                hi: w[1].lo.clone(),
            })
            .collect()
    }

    pub fn largest_gap_length(&self) -> Rational {
        self.parts
            .windows(2)
            .map(|w| &w[1].lo - &w[0].hi)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.parts.partition_point(|p| &p.hi < x);
        i < self.parts.len() && self.parts[i].contains(x)
    }

    /// `J ⊆ K` as point sets.
    pub fn covers_interval(&self, j: &Interval) -> bool {
        let i = self.parts.partition_point(|p| p.hi < j.lo);
        i < self.parts.len() && self.parts[i].contains_interval(j)
    }

    /// True when the open interval `(lo, hi)` misses every part.
    pub fn misses_open(&self, lo: &Rational, hi: &Rational) -> bool {
        let i = self.parts.partition_point(|p| &p.hi <= lo);
        i == self.parts.len() || &self.parts[i].lo >= hi
    }

    /// Exact Minkowski sum `{a + b}`.
    pub fn minkowski_sum(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut raw = Vec::with_capacity(self.parts.len() * other.parts.len());
        for a in &self.parts {
            for b in &other.parts {
                raw.push(a.add(b));
            }
        }
        Self::normalize(raw).expect("sum of nonempty sets is nonempty")
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let raw = self
            .parts
            .iter()
            .chain(other.parts.iter())
            .cloned()
            .collect();
        Self::normalize(raw).expect("nonempty")
    }

    pub fn translate(&self, by: &Rational) -> IntervalUnion {
        Self {
            parts: self.parts.iter().map(|p| p.translate(by)).collect(),
        }
    }

    /// `c·K + d` for `c > 0`.
    pub fn affine(&self, scale: &Rational, shift: &Rational) -> Result<IntervalUnion> {
        if scale <= &Rational::zero() {
            return Err(Error::Domain("affine scale must be positive".into()));
        }
        Ok(Self {
            parts: self
                .parts
                .iter()
                .map(|p| Interval {
                    lo: &p.lo * scale + shift,
                    hi: &p.hi * scale + shift,
                })
                .collect(),
        })
    }

    /// Parts clipped to `[lo, hi]`; `None` when nothing remains.
    pub fn clip(&self, lo: &Rational, hi: &Rational) -> Option<IntervalUnion> {
        let parts: Vec<Interval> = self
            .parts
            .iter()
            .filter(|p| &p.hi >= lo && &p.lo <= hi)
            .map(|p| Interval {
                lo: if &p.lo < lo { lo.clone() } else { p.lo.clone() },
                hi: if &p.hi > hi { hi.clone() } else { p.hi.clone() },
            })
            .collect();
        (!parts.is_empty()).then_some(Self { parts })
    }

    /// Closed-endpoint pairs of the maximal open subintervals of `[lo, hi]` not
    /// covered by `self`.
    pub fn uncovered_within(&self, lo: &Rational, hi: &Rational) -> Vec<Interval> {
        if lo == hi {
            return if self.contains(lo) {
                vec![]
            } else {
                vec![Interval::point(lo.clone())]
            };
        }
        let mut out = Vec::new();
        let mut cursor = lo.clone();
        for p in &self.parts {
            if p.hi < cursor {
                continue;
            }
            if &p.lo > hi {
                break;
            }
            if p.lo > cursor {
                out.push(Interval {
                    lo: cursor.clone(),
                    hi: p.lo.clone(),
                });
            }
            if p.hi > cursor {
                cursor = p.hi.clone();
            }
        }
        if &cursor < hi {
            out.push(Interval {
                lo: cursor,
                hi: hi.clone(),
            });
        }
        out
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

#[derive(Serialize, Deserialize)]
struct UnionRepr {
    parts: Vec<Interval>,
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        UnionRepr {
            parts: self.parts.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = UnionRepr::deserialize(d)?;
        IntervalUnion::normalize(repr.parts).map_err(serde::de::Error::custom)
    }
}

/// Level-`depth` approximant of the middle-thirds Cantor set in `[0, 1]`.
pub fn middle_thirds(depth: u32) -> IntervalUnion {
    let third = crate::rational::ratio(1, 3);
    crate::fragmentation::middle_alpha_cantor(&crate::rational::int(1), &third, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn iv(lo: i64, hi: i64) -> Interval {
        Interval::new(int(lo), int(hi)).unwrap()
    }

    fn set(pairs: &[(i64, i64)]) -> IntervalUnion {
        IntervalUnion::normalize(pairs.iter().map(|&(a, b)| iv(a, b)).collect()).unwrap()
    }

    #[test]
    fn normalize_merges_touching_and_sorts() {
        assert_eq!(set(&[(0, 1), (1, 2)]).parts(), &[iv(0, 2)]);
        assert_eq!(set(&[(2, 3), (0, 1)]).parts(), &[iv(0, 1), iv(2, 3)]);
        assert_eq!(
            set(&[(0, 2), (1, 3), (5, 5)]).parts(),
            &[iv(0, 3), iv(5, 5)]
        );
        assert_eq!(IntervalUnion::normalize(vec![]), Err(Error::EmptySet));
        assert!(Interval::new(int(2), int(1)).is_err());
    }

    #[test]
    fn canonical_constructor_rejects_touching() {
        assert_eq!(
            IntervalUnion::from_canonical(vec![iv(0, 1), iv(1, 2)]),
            Err(Error::NotCanonical { index: 1 })
        );
    }

    #[test]
    fn sums() {
        assert_eq!(
            set(&[(0, 1)]).minkowski_sum(&set(&[(0, 1)])).parts(),
            &[iv(0, 2)]
        );
        let k = set(&[(0, 1), (10, 11)]);
        assert_eq!(
            k.minkowski_sum(&k).parts(),
            &[iv(0, 2), iv(10, 12), iv(20, 22)]
        );
        assert_eq!(
            middle_thirds(2).minkowski_sum(&middle_thirds(2)).parts(),
            &[iv(0, 2)]
        );
    }

    #[test]
    fn gaps_and_measures() {
        assert!(set(&[(0, 1)]).gaps().is_empty());
        assert_eq!(set(&[(0, 1), (2, 3)]).gaps(), vec![iv(1, 2)]);
        let m1 = middle_thirds(1);
        assert_eq!(
            m1.gaps(),
            vec![Interval::new(ratio(1, 3), ratio(2, 3)).unwrap()]
        );
        let k = set(&[(0, 1), (2, 3)]);
        assert_eq!(k.diam(), int(3));
        assert_eq!(k.largest_gap_length(), int(1));
        assert_eq!(set(&[(5, 5)]).diam(), int(0));
        assert_eq!(middle_thirds(2).largest_gap_length(), ratio(1, 3));
    }

    #[test]
    fn coverage() {
        let k = set(&[(0, 2)]);
        assert!(k.covers_interval(&Interval::new(ratio(1, 2), ratio(3, 2)).unwrap()));
        let k = set(&[(0, 1), (2, 3)]);
        assert!(!k.covers_interval(&Interval::new(ratio(1, 2), ratio(5, 2)).unwrap()));
        let k = set(&[(0, 2), (2, 3)]);
        assert!(k.covers_interval(&iv(1, 3)));
        assert!(k.contains(&int(3)));
        assert!(!k.contains(&int(4)));
    }

    #[test]
    fn uncovered_and_open_misses() {
        let k = set(&[(0, 1), (2, 3), (5, 6)]);
        assert_eq!(
            k.uncovered_within(&int(0), &int(6)),
            vec![iv(1, 2), iv(3, 5)]
        );
        assert_eq!(
            k.uncovered_within(&int(-1), &int(7)),
            vec![iv(-1, 0), iv(1, 2), iv(3, 5), iv(6, 7)]
        );
        assert!(k.uncovered_within(&ratio(1, 2), &ratio(1, 2)).is_empty());
        assert!(k.misses_open(&int(3), &int(5)));
        assert!(!k.misses_open(&int(3), &ratio(11, 2)));
        assert!(k.misses_open(&int(6), &int(9)));
    }

    #[test]
    fn json_roundtrip_with_decimals() {
        let k: IntervalUnion =
            serde_json::from_str(r#"{"parts":[["0","0.5"],["3/4","1"]]}"#).unwrap();
        assert_eq!(k.parts()[0].hi(), &ratio(1, 2));
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"parts":[["0","1/2"],["3/4","1"]]}"#);
    }
}
