//! Shared proptest strategies.
#![allow(dead_code)]

use proptest::prelude::*;
use thicksum::functions::{Pwa, PwaTail};
use thicksum::rational::ratio;
use thicksum::{Interval, IntervalUnion, Rational};

/// `p/q` with `lo <= p/q <= hi` and `q <= max_den`.
pub fn rational(lo: i64, hi: i64, max_den: i64) -> impl Strategy<Value = Rational> {
    (1..=max_den).prop_flat_map(move |q| (lo * q..=hi * q).prop_map(move |p| ratio(p, q)))
}

pub fn positive(hi: i64, max_den: i64) -> impl Strategy<Value = Rational> {
    (1..=max_den).prop_flat_map(move |q| (1..=hi * q).prop_map(move |p| ratio(p, q)))
}

/// Unions of up to `max_parts` closed intervals inside `[0, 8]`; points allowed.
pub fn union(max_parts: usize) -> impl Strategy<Value = IntervalUnion> {
    prop::collection::vec((rational(0, 8, 8), rational(0, 2, 8)), 1..=max_parts).prop_map(|raw| {
        let parts = raw
            .into_iter()
            .map(|(lo, len)| Interval::new(lo.clone(), lo + len).unwrap())
            .collect();
        IntervalUnion::normalize(parts).unwrap()
    })
}

/// Breakpoints `(0, y0), (x1, y1), ...` with slopes in `[1/8, 8]`.
fn knots(max_pieces: usize) -> impl Strategy<Value = Vec<(Rational, Rational)>> {
    (
        rational(0, 2, 4),
        prop::collection::vec((positive(3, 4), positive(64, 8)), 1..=max_pieces),
    )
        .prop_map(|(y0, steps)| {
            let mut pts = vec![(Rational::from_integer(0.into()), y0)];
            for (dx, s) in steps {
                let s = s.max(ratio(1, 8)).min(ratio(8, 1));
                let (x, y) = pts.last().unwrap().clone();
                pts.push((&x + &dx, y + s * dx));
            }
            pts
        })
}

pub fn pwa_final_slope(max_pieces: usize) -> impl Strategy<Value = Pwa> {
    (knots(max_pieces), positive(64, 8)).prop_map(|(pts, s)| {
        let s = s.max(ratio(1, 8)).min(ratio(8, 1));
        Pwa::new(pts, PwaTail::FinalSlope(s)).unwrap()
    })
}

pub fn pwa_periodic(max_pieces: usize) -> impl Strategy<Value = Pwa> {
    knots(max_pieces).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), 0..n - 1)
            .prop_map(|(pts, from_index)| Pwa::new(pts, PwaTail::Periodic { from_index }).unwrap())
    })
}

pub fn pwa(max_pieces: usize) -> impl Strategy<Value = Pwa> {
    prop_oneof![pwa_final_slope(max_pieces), pwa_periodic(max_pieces)]
}
