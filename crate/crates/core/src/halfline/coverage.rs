use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragmentation::Fragmentation;
use crate::functions::{apply_to_set, exact_image, AdmissibleFunction};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{format_rational, serde_rational, Rational};

/// How image fragments relate to the true images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageKind {
    Exact,
    /// Subsets of the true images: coverage is certified.
    Inner,
    /// Supersets of the true images: uncovered gaps are certified, coverage is advisory.
    Outer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: CoverageKind,
    #[serde(with = "serde_rational")]
    pub from: Rational,
    #[serde(with = "serde_rational")]
    pub to: Rational,
    pub covered: bool,
    /// `covered` holds for the true sum, not just for the enclosures.
    pub certified: bool,
    pub uncovered: Vec<Interval>,
    pub fragments_used: usize,
    pub pairs: usize,
    /// The computed sum restricted to values `<= to`.
    pub sum: IntervalUnion,
}

/// Exact `⋃_{i<=j} (K_i + K_j)` up to `x`, and whether it covers `[c, x]`.
///
/// Every fragment that can contribute below `x` must be present: the last
/// one has to start beyond `x − min K_0`.
pub fn sum_coverage_upto(
    frags: &[IntervalUnion],
    kind: CoverageKind,
    c: &Rational,
    x: &Rational,
) -> Result<CoverageReport> {
    let first = frags.first().ok_or(Error::EmptySet)?;
    let reach = x - first.min();
    let last = frags.last().expect("nonempty");
    if last.min() <= &reach {
        return Err(Error::Refused(format!(
            "insufficient prefix: {} fragments end with min {} but fragments starting beyond {} are required",
            frags.len(),
            format_rational(last.min()),
            format_rational(&reach)
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..frags.len())
        .flat_map(|i| {
            let budget = x - frags[i].min();
            (i..frags.len())
                .take_while(move |&j| frags[j].min() <= &budget)
                .map(move |j| (i, j))
        })
        .collect();
    let raw: Vec<Interval> = pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            let mut v = Vec::with_capacity(frags[i].parts().len() * frags[j].parts().len());
            for p in frags[i].parts() {
                for q in frags[j].parts() {
                    if &(p.lo() + q.lo()) <= x {
                        v.push(p.add(q));
                    }
                }
            }
            v
        })
        .collect();
    let total = IntervalUnion::normalize(raw)?;
    let sum = total.clip(total.min(), x).unwrap_or(total.clone());
    let uncovered = sum.uncovered_within(c, x);
    let covered = uncovered.is_empty();
    Ok(CoverageReport {
        kind,
        from: c.clone(),
        to: x.clone(),
        covered,
        certified: covered && kind != CoverageKind::Outer,
        uncovered,
        fragments_used: frags.len(),
        pairs: pairs.len(),
        sum,
    })
}

/// Largest number of fragments generated for a coverage horizon.
const MAX_COVERAGE_FRAGMENTS: usize = 200_000;

/// Image fragments of the requested kind, enough for [`sum_coverage_upto`] at `x`.
pub fn image_prefix_for_horizon(
    f: &Fragmentation,
    g: &AdmissibleFunction,
    kind: CoverageKind,
    x: &Rational,
    precision: u32,
) -> Result<Vec<IntervalUnion>> {
    let image = |k: &IntervalUnion| -> Result<IntervalUnion> {
        match kind {
            CoverageKind::Exact => exact_image(g, k),
            CoverageKind::Inner => apply_to_set(g, k, precision)?.inner.ok_or_else(|| {
                Error::Refused("inner enclosure of an image fragment is empty".into())
            }),
            CoverageKind::Outer => Ok(apply_to_set(g, k, precision)?.outer),
        }
    };
    let mut out: Vec<IntervalUnion> = Vec::new();
    let mut n = 0;
    loop {
        if n >= f.len() && f.period().is_none() {
            return Err(Error::Refused(format!(
                "insufficient prefix: all {} fragments used and the sum may still reach below {}",
                f.len(),
                format_rational(x)
            )));
        }
        if n >= MAX_COVERAGE_FRAGMENTS {
            return Err(Error::Refused(format!(
                "horizon needs more than {MAX_COVERAGE_FRAGMENTS} fragments"
            )));
        }
        let img = image(&f.fragment(n)?)?;
        let done = out
            .first()
            .is_some_and(|k0: &IntervalUnion| img.min() > &(x - k0.min()));
        out.push(img);
        if done {
            return Ok(out);
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragmentation::make_faa;
    use crate::interval::middle_thirds;
    use crate::rational::{int, ratio};

    #[test]
    fn identity_on_faa_covers() {
        let f = make_faa(&int(1), &ratio(1, 2), 2).unwrap();
        let frags = image_prefix_for_horizon(
            &f,
            &AdmissibleFunction::identity(),
            CoverageKind::Exact,
            &int(20),
            64,
        )
        .unwrap();
        let rep = sum_coverage_upto(&frags, CoverageKind::Exact, &int(0), &int(20)).unwrap();
        assert!(rep.covered && rep.certified);
    }

    #[test]
    fn gaps_are_listed_exactly() {
        let f = make_faa(&int(1), &int(2), 2).unwrap();
        let frags = image_prefix_for_horizon(
            &f,
            &AdmissibleFunction::identity(),
            CoverageKind::Exact,
            &int(10),
            64,
        )
        .unwrap();
        let rep = sum_coverage_upto(&frags, CoverageKind::Exact, &int(0), &int(10)).unwrap();
        assert!(!rep.covered);
        assert_eq!(rep.uncovered[0], Interval::new(int(2), int(3)).unwrap());
    }

    #[test]
    fn middle_thirds_self_sum() {
        let k = middle_thirds(3);
        let rep = sum_coverage_upto(
            &[k.clone(), k.translate(&int(10))],
            CoverageKind::Exact,
            &int(0),
            &int(2),
        )
        .unwrap();
        assert!(rep.covered);
    }

    #[test]
    fn short_prefix_is_refused() {
        let f = make_faa(&int(1), &int(1), 2).unwrap();
        assert!(matches!(
            sum_coverage_upto(f.fragments(), CoverageKind::Exact, &int(0), &int(10)),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn outer_coverage_is_only_advisory() {
        let f = make_faa(&int(1), &ratio(1, 10), 2).unwrap();
        let g = AdmissibleFunction::exp(ratio(1, 10)).unwrap();
        let frags = image_prefix_for_horizon(&f, &g, CoverageKind::Outer, &int(4), 64).unwrap();
        let rep = sum_coverage_upto(&frags, CoverageKind::Outer, &int(2), &int(4)).unwrap();
        assert!(rep.covered && !rep.certified);
    }
}
