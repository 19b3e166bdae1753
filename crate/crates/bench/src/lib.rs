//! Fixtures shared by the criterion benchmarks.

use thicksum::fragmentation::make_faa;
use thicksum::functions::{Pwa, PwaTail};
use thicksum::interval::middle_thirds;
use thicksum::rational::{int, ratio};
use thicksum::{AdmissibleFunction, Fragmentation, IntervalUnion, LogAffine, Rational};

/// Middle-thirds Cantor approximation with `2^depth` parts.
pub fn cantor(depth: u32) -> IntervalUnion {
    middle_thirds(depth)
}

/// A staircase with `n` pieces alternating between slopes 1 and 3, then slope 2.
pub fn staircase(n: usize) -> AdmissibleFunction {
    let mut pts = vec![(int(0), int(0))];
    for i in 0..n {
        let (x, y) = pts.last().cloned().unwrap();
        let slope = if i % 2 == 0 { int(1) } else { int(3) };
        pts.push((x + int(1), y + slope));
    }
    AdmissibleFunction::PiecewiseAffine(Pwa::new(pts, PwaTail::FinalSlope(int(2))).unwrap())
}

pub fn faa(big_a: i64, a: (i64, i64)) -> Fragmentation {
    make_faa(&int(big_a), &ratio(a.0, a.1), 2).unwrap()
}

/// One phase-scan cell: `r = 1/2`, `a` from the given literal.
pub fn phase_cell(a: &str) -> (Rational, LogAffine) {
    (ratio(1, 2), a.parse().unwrap())
}
