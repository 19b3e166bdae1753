//! Newhouse thickness of compact interval unions.
//!
//! A presentation orders the gaps `U_1, U_2, …`. For the `n`-th gap and each of
//! its endpoints `u`, the bridge is the component of the hull minus the first
//! `n` gaps that contains `u`; its length over `|U_n|` is the local ratio, and
//! the presentation's thickness is the smallest such ratio. Listing gaps by
//! nonincreasing length maximizes the result.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::rational::{Extended, Rational};

pub type ThicknessValue = Extended;

/// Largest gap count accepted by [`tau_bruteforce`].
pub const BRUTEFORCE_MAX_GAPS: usize = 8;

/// An ordering of the gaps of a compact set, as indices into `K.gaps()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapPresentation {
    order: Vec<usize>,
}

impl GapPresentation {
    pub fn new(k: &IntervalUnion, order: Vec<usize>) -> Result<Self> {
        let g = k.parts().len().saturating_sub(1);
        let mut seen = vec![false; g];
        if order.len() != g {
            return Err(Error::Refused(format!(
                "presentation lists {} gaps, set has {g}",
                order.len()
            )));
        }
        for &i in &order {
            if i >= g || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Refused(format!(
                    "presentation is not a permutation of 0..{g}"
                )));
            }
        }
        Ok(Self { order })
    }

    /// Nonincreasing length, ties broken left to right.
    pub fn canonical(k: &IntervalUnion) -> Self {
        let gaps = k.gaps();
        let order = (0..gaps.len())
            .sorted_by(|&i, &j| gaps[j].length().cmp(&gaps[i].length()).then(i.cmp(&j)))
            .collect();
        Self { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

fn tau_for_order(gaps: &[Interval], hull: &Interval, order: &[usize]) -> ThicknessValue {
    if gaps.is_empty() {
        return Extended::Infinite;
    }
    // Gaps are sorted and disjoint, so the bridge ends at the nearest
    // already-removed gap on each side.
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    let mut best: Option<Rational> = None;
    for &gi in order {
        let u = &gaps[gi];
        let left = match removed.range(..gi).next_back() {
            Some(&ei) => gaps[ei].hi().clone(),
            None => hull.lo().clone(),
        };
        let right = match removed.range(gi + 1..).next() {
            Some(&ei) => gaps[ei].lo().clone(),
            None => hull.hi().clone(),
        };
        removed.insert(gi);
        let len = u.length();
        let ratio = (u.lo() - &left).min(&right - u.hi()) / len;
        if best.as_ref().map_or(true, |b| &ratio < b) {
            best = Some(ratio);
        }
    }
    Extended::Finite(best.unwrap_or_else(Rational::zero))
}

pub fn tau_for_presentation(k: &IntervalUnion, p: &GapPresentation) -> ThicknessValue {
    tau_for_order(&k.gaps(), &k.hull(), p.order())
}

/// Thickness via the canonical presentation; `inf` exactly for intervals.
pub fn tau(k: &IntervalUnion) -> ThicknessValue {
    tau_for_presentation(k, &GapPresentation::canonical(k))
}

/// Maximum over all gap orderings. Refuses sets with more than eight gaps.
pub fn tau_bruteforce(k: &IntervalUnion) -> Result<ThicknessValue> {
    let gaps = k.gaps();
    if gaps.len() > BRUTEFORCE_MAX_GAPS {
        return Err(Error::Refused(format!(
            "brute-force thickness enumerates all orderings; {} gaps exceeds the limit of {BRUTEFORCE_MAX_GAPS}",
            gaps.len()
        )));
    }
    let hull = k.hull();
    Ok((0..gaps.len())
        .permutations(gaps.len())
        .map(|p| tau_for_order(&gaps, &hull, &p))
        .max()
        .unwrap_or(Extended::Infinite))
}

/// Sufficient condition for `K + K2` to equal the sum of the hulls.
pub fn gap_lemma_applies(k: &IntervalUnion, k2: &IntervalUnion) -> bool {
    tau(k)
        .mul(&tau(k2))
        .gt_rational(&Rational::from_integer(1.into()))
        && k2.largest_gap_length() <= k.diam()
        && k.largest_gap_length() <= k2.diam()
}

/// `γ(K) <= diam(K) / (1 + 2β)`, valid whenever `τ(K) > β`.
pub fn longest_gap_bound(k: &IntervalUnion, beta: &Rational) -> Result<bool> {
    if !tau(k).gt_rational(beta) {
        return Err(Error::Refused(format!(
            "thickness {} does not exceed beta = {}",
            tau(k),
            beta
        )));
    }
    let two = Rational::from_integer(2.into());
    Ok(k.largest_gap_length() <= k.diam() / (Rational::from_integer(1.into()) + two * beta))
}
