use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{format_rational, Rational};

/// Behaviour past the last breakpoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PwaTail {
    /// Affine continuation with the given slope.
    FinalSlope(Rational),
    /// The segments between breakpoint `from_index` and the last breakpoint
    /// repeat forever, each copy shifted by the pattern's width and rise.
    Periodic { from_index: usize },
    /// Nothing is known past the last breakpoint.
    Unknown,
}

/// One affine piece `[lo, hi]` (`hi = None` means unbounded) with its slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub lo: Rational,
    pub hi: Option<Rational>,
    pub slope: Rational,
}

/// A continuous, strictly increasing piecewise-affine function on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pwa {
    points: Vec<(Rational, Rational)>,
    tail: PwaTail,
}

impl Pwa {
    pub fn new(points: Vec<(Rational, Rational)>, tail: PwaTail) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidFunction(m));
        let Some((x0, y0)) = points.first() else {
            return bad("piecewise-affine data needs at least one breakpoint".into());
        };
        if !x0.is_zero() {
            return bad(format!(
                "first breakpoint must be at x = 0, got {}",
                format_rational(x0)
            ));
        }
        if y0.is_negative() {
            return bad("values must be nonnegative".into());
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[0].0 >= w[1].0 {
                return bad(format!(
                    "breakpoint x values must increase strictly (index {})",
                    i + 1
                ));
            }
            if w[0].1 >= w[1].1 {
                return bad(format!(
                    "breakpoint y values must increase strictly (index {})",
                    i + 1
                ));
            }
        }
        match &tail {
            PwaTail::FinalSlope(s) if !s.is_positive() => {
                return bad("final slope must be positive".into())
            }
            PwaTail::Periodic { from_index } if *from_index + 1 >= points.len() => {
                return bad(
                    "periodic pattern needs at least one segment before the last breakpoint".into(),
                )
            }
            _ => {}
        }
        Ok(Self { points, tail })
    }

    pub fn identity() -> Self {
        Self {
            points: vec![(Rational::zero(), Rational::zero())],
            tail: PwaTail::FinalSlope(Rational::one()),
        }
    }

    pub fn points(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn tail(&self) -> &PwaTail {
        &self.tail
    }

    pub fn last_x(&self) -> &Rational {
        &self.points.last().expect("nonempty").0
    }

    /// `(start, width, rise)` of the repeating pattern.
    pub fn period(&self) -> Option<(Rational, Rational, Rational)> {
        match self.tail {
            PwaTail::Periodic { from_index } => {
                let (xs, ys) = &self.points[from_index];
                let (xe, ye) = self.points.last().expect("nonempty");
                Some((xs.clone(), xe - xs, ye - ys))
            }
            _ => None,
        }
    }

    fn eval_prefix(&self, x: &Rational) -> Rational {
        let i = self.points.partition_point(|(px, _)| px <= x);
        debug_assert!(i >= 1 && i <= self.points.len());
        let (x0, y0) = &self.points[i - 1];
        if i == self.points.len() {
            return y0.clone();
        }
        let (x1, y1) = &self.points[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        if x.is_negative() {
            return Err(Error::Domain(format!(
                "x = {} is negative",
                format_rational(x)
            )));
        }
        let (xl, yl) = self.points.last().expect("nonempty");
        if x <= xl {
            return Ok(self.eval_prefix(x));
        }
        match &self.tail {
            PwaTail::FinalSlope(s) => Ok(yl + s * (x - xl)),
            PwaTail::Periodic { .. } => {
                let (xs, p, h) = self.period().expect("periodic");
                let off = x - xl;
                let m = (&off / &p).floor();
                let s = off - &m * &p;
                Ok(self.eval_prefix(&(xs + s)) + (m + Rational::one()) * h)
            }
            PwaTail::Unknown => Err(Error::Domain(format!(
                "x = {} lies beyond the last declared breakpoint {}",
                format_rational(x),
                format_rational(xl)
            ))),
        }
    }

    /// Affine pieces covering `[0, end]` (or as far as the data is known).
    /// The returned flag is `false` when the data stops before `end`.
    pub fn segments_until(&self, end: &Rational) -> (Vec<Segment>, bool) {
        let mut segs: Vec<Segment> = self
            .points
            .windows(2)
            .map(|w| Segment {
                lo: w[0].0.clone(),
                hi: Some(w[1].0.clone()),
                slope: (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0),
            })
            .collect();
        let xl = self.last_x().clone();
        match &self.tail {
            PwaTail::FinalSlope(s) => {
                segs.push(Segment {
                    lo: xl,
                    hi: None,
                    slope: s.clone(),
                });
                (segs, true)
            }
            PwaTail::Unknown => (segs, end <= &xl),
            PwaTail::Periodic { from_index } => {
                let (_, p, _) = self.period().expect("periodic");
                let pattern: Vec<Segment> = segs[*from_index..].to_vec();
                let mut shift = p.clone();
                while &(&xl + &shift - &p) < end {
                    for s in &pattern {
                        segs.push(Segment {
                            lo: &s.lo + &shift,
                            hi: s.hi.as_ref().map(|h| h + &shift),
                            slope: s.slope.clone(),
                        });
                    }
                    shift += &p;
                }
                (segs, true)
            }
        }
    }

    /// Breakpoints up to at least `end`, including unrolled periodic copies.
    pub fn breakpoints_until(&self, end: &Rational) -> Vec<Rational> {
        let (segs, _) = self.segments_until(end);
        let mut xs: Vec<Rational> = segs.iter().map(|s| s.lo.clone()).collect();
        if let Some(Some(h)) = segs.last().map(|s| s.hi.clone()) {
            xs.push(h);
        }
        xs
    }

    /// Left and right slopes at `x`; the left slope is absent at `x = 0`.
    pub fn slopes_at(&self, x: &Rational) -> Result<(Option<Rational>, Rational)> {
        if x.is_negative() {
            return Err(Error::Domain(format!(
                "x = {} is negative",
                format_rational(x)
            )));
        }
        let (segs, complete) = self.segments_until(&(x + Rational::one()));
        if !complete && x >= self.last_x() {
            return Err(Error::Domain(
                "slope beyond the declared breakpoints is unknown".into(),
            ));
        }
        let right = segs
            .iter()
            .find(|s| &s.lo <= x && s.hi.as_ref().map_or(true, |h| x < h))
            .map(|s| s.slope.clone())
            .expect("segments cover x");
        let left = if x.is_zero() {
            None
        } else {
            segs.iter()
                .find(|s| &s.lo < x && s.hi.as_ref().map_or(true, |h| x <= h))
                .map(|s| s.slope.clone())
        };
        Ok((left, right))
    }

    /// Smallest and largest slope among pieces whose closure meets `[a, b]`:
    /// these are `inf D⁻` and `sup D⁺` over the window.
    pub fn slope_range(&self, a: &Rational, b: &Rational) -> Result<(Rational, Rational)> {
        let (segs, complete) = self.segments_until(b);
        if !complete {
            return Err(Error::Domain(
                "window extends beyond the declared breakpoints".into(),
            ));
        }
        let slopes: Vec<&Rational> = segs
            .iter()
            .filter(|s| &s.lo <= b && s.hi.as_ref().map_or(true, |h| h >= a))
            .map(|s| &s.slope)
            .collect();
        let lo = slopes.iter().min().expect("window meets a segment");
        let hi = slopes.iter().max().expect("window meets a segment");
        Ok(((*lo).clone(), (*hi).clone()))
    }

    pub fn scale(&self, c: &Rational) -> Result<Pwa> {
        if !c.is_positive() {
            return Err(Error::InvalidFunction(
                "scale factor must be positive".into(),
            ));
        }
        let points = self
            .points
            .iter()
            .map(|(x, y)| (x.clone(), y * c))
            .collect();
        let tail = match &self.tail {
            PwaTail::FinalSlope(s) => PwaTail::FinalSlope(s * c),
            t => t.clone(),
        };
        Pwa::new(points, tail)
    }

    fn periodic_width(&self) -> Option<Rational> {
        self.period().map(|(_, p, _)| p)
    }

    /// Exact pointwise sum. Tails combine when both are eventually affine, or
    /// eventually periodic with a common period (an affine tail is periodic
    /// with any period).
    pub fn add(&self, other: &Pwa) -> Result<Pwa> {
        use PwaTail::*;
        let merged = |upto: &Rational| -> Vec<Rational> {
            let mut xs = self.breakpoints_until(upto);
            xs.extend(other.breakpoints_until(upto));
            xs.retain(|x| x <= upto);
            xs.push(upto.clone());
            xs.sort();
            xs.dedup();
            xs
        };
        let eval_pts = |xs: Vec<Rational>| -> Result<Vec<(Rational, Rational)>> {
            xs.into_iter()
                .map(|x| Ok((x.clone(), self.eval(&x)? + other.eval(&x)?)))
                .collect()
        };
        let end = self.last_x().clone().max(other.last_x().clone());
        match (&self.tail, &other.tail) {
            (FinalSlope(s1), FinalSlope(s2)) => {
                Pwa::new(eval_pts(merged(&end))?, FinalSlope(s1 + s2))
            }
            (Unknown, _) | (_, Unknown) => {
                let end = self.last_x().clone().min(other.last_x().clone());
                Pwa::new(eval_pts(merged(&end))?, Unknown)
            }
            _ => {
                let p = match (self.periodic_width(), other.periodic_width()) {
                    (Some(p1), Some(p2)) if p1 != p2 => {
                        return Err(Error::Refused(format!(
                            "periodic tails with periods {} and {} do not combine",
                            format_rational(&p1),
                            format_rational(&p2)
                        )))
                    }
                    (Some(p), _) | (_, Some(p)) => p,
                    (None, None) => unreachable!("both affine handled above"),
                };
                let stop = &end + &p;
                let mut xs = merged(&stop);
                if !xs.contains(&end) {
                    xs.push(end.clone());
                    xs.sort();
                }
                let from_index = xs.iter().position(|x| x == &end).expect("end inserted");
                Pwa::new(eval_pts(xs)?, Periodic { from_index })
            }
        }
    }

    /// Exact image of a set in `[0, ∞)`; parts map to `[g(lo), g(hi)]`.
    pub fn image(&self, k: &IntervalUnion) -> Result<IntervalUnion> {
        let parts = k
            .parts()
            .iter()
            .map(|p| Interval::new(self.eval(p.lo())?, self.eval(p.hi())?))
            .collect::<Result<Vec<_>>>()?;
        IntervalUnion::from_canonical(parts)
    }
}

/// Slope of the chord over `[a, b]`.
pub fn secant(p: &Pwa, a: &Rational, b: &Rational) -> Result<Rational> {
    Ok((p.eval(b)? - p.eval(a)?) / (b - a))
}

#[cfg(test)]
pub(crate) fn pt(x: i64, y: i64) -> (Rational, Rational) {
    (crate::rational::int(x), crate::rational::int(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn zigzag() -> Pwa {
        // slopes 1, 3 alternating, period 2, rise 4
        Pwa::new(
            vec![pt(0, 0), pt(1, 1), pt(2, 4)],
            PwaTail::Periodic { from_index: 0 },
        )
        .unwrap()
    }

    #[test]
    fn evaluation() {
        let g = Pwa::new(vec![pt(0, 0), pt(1, 2)], PwaTail::FinalSlope(int(1))).unwrap();
        assert_eq!(g.eval(&ratio(1, 2)).unwrap(), int(1));
        assert_eq!(g.eval(&int(3)).unwrap(), int(4));
        let z = zigzag();
        assert_eq!(z.eval(&int(3)).unwrap(), int(5));
        assert_eq!(z.eval(&ratio(7, 2)).unwrap(), int(6) + ratio(1, 2));
        assert_eq!(z.eval(&int(10)).unwrap(), int(20));
        let u = Pwa::new(vec![pt(0, 0), pt(1, 1)], PwaTail::Unknown).unwrap();
        assert!(u.eval(&int(2)).is_err());
    }

    #[test]
    fn validation() {
        assert!(Pwa::new(vec![pt(1, 0)], PwaTail::FinalSlope(int(1))).is_err());
        assert!(Pwa::new(vec![pt(0, 0), pt(1, 0)], PwaTail::FinalSlope(int(1))).is_err());
        assert!(Pwa::new(vec![pt(0, 0)], PwaTail::FinalSlope(int(0))).is_err());
        assert!(Pwa::new(
            vec![pt(0, 0), pt(1, 1)],
            PwaTail::Periodic { from_index: 1 }
        )
        .is_err());
    }

    #[test]
    fn slopes_at_kinks() {
        let g = Pwa::new(
            vec![pt(0, 0), pt(1, 1), pt(2, 4)],
            PwaTail::FinalSlope(int(1)),
        )
        .unwrap();
        assert_eq!(g.slopes_at(&int(1)).unwrap(), (Some(int(1)), int(3)));
        assert_eq!(g.slopes_at(&int(0)).unwrap(), (None, int(1)));
        assert_eq!(g.slopes_at(&int(2)).unwrap(), (Some(int(3)), int(1)));
        assert_eq!(zigzag().slopes_at(&int(4)).unwrap(), (Some(int(3)), int(1)));
        assert_eq!(
            zigzag().slope_range(&ratio(1, 2), &ratio(3, 4)).unwrap(),
            (int(1), int(1))
        );
        assert_eq!(
            zigzag().slope_range(&ratio(1, 2), &int(1)).unwrap(),
            (int(1), int(3))
        );
    }

    #[test]
    fn sums_of_tails() {
        let a = Pwa::new(vec![pt(0, 0), pt(1, 2)], PwaTail::FinalSlope(int(1))).unwrap();
        let b = Pwa::new(vec![pt(0, 1), pt(2, 2)], PwaTail::FinalSlope(int(3))).unwrap();
        let s = a.add(&b).unwrap();
        for x in [ratio(1, 3), int(1), ratio(5, 2), int(9)] {
            assert_eq!(
                s.eval(&x).unwrap(),
                a.eval(&x).unwrap() + b.eval(&x).unwrap()
            );
        }
        let z = zigzag().add(&a).unwrap();
        for x in [ratio(1, 3), int(1), ratio(5, 2), int(9), ratio(41, 3)] {
            assert_eq!(
                z.eval(&x).unwrap(),
                zigzag().eval(&x).unwrap() + a.eval(&x).unwrap()
            );
        }
        let other = Pwa::new(
            vec![pt(0, 0), pt(3, 1)],
            PwaTail::Periodic { from_index: 0 },
        )
        .unwrap();
        assert!(zigzag().add(&other).is_err());
    }

    #[test]
    fn images_are_exact() {
        let k = IntervalUnion::from_pairs([(int(0), int(1)), (int(2), int(3))]).unwrap();
        assert_eq!(Pwa::identity().image(&k).unwrap(), k);
        assert_eq!(secant(&zigzag(), &int(0), &int(2)).unwrap(), int(2));
    }
}
