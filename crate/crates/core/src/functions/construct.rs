use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{eval_bits, value_ratio, AdmissibleFunction, Pwa, PwaTail};
use crate::error::{Error, Result};
use crate::numeric::DEFAULT_BITS;
use crate::rational::{int, serde_rational, Extended, Rational};

/// A function below `h` (past its first breakpoint) whose consecutive slopes
/// drop by a factor of at least `n` at the `n`-th breakpoint, so it has no
/// bounded relative variation.
///
/// With `h(u_n) >= n` certified at dyadic `u_n`, the breakpoints satisfy
/// `y_0 = 0`, `y_1 = max(u_1, 1)`, `y_{n+1} = max(u_{n+1}, y_n + n (y_n − y_{n−1}))`
/// and `g(y_n) = n/2`. The data past the last breakpoint is left undeclared.
pub fn construct_non_brv(h: &AdmissibleFunction, breakpoints: usize) -> Result<AdmissibleFunction> {
    if breakpoints < 2 {
        return Err(Error::Domain(
            "the construction needs at least two breakpoints".into(),
        ));
    }
    let level_point = |n: i64| -> Result<Rational> {
        let target = int(n);
        let mut u = Rational::one();
        for _ in 0..4096 {
            if eval_bits(h, &u, DEFAULT_BITS)?.lo() >= &target {
                return Ok(u);
            }
            u *= int(2);
        }
        Err(Error::Refused(format!("h does not reach {n} below 2^4096")))
    };
    let mut ys = vec![Rational::zero(), level_point(1)?.max(Rational::one())];
    for n in 1..(breakpoints as i64 - 1) {
        let len = ys.len();
        let grow = &ys[len - 1] + (&ys[len - 1] - &ys[len - 2]) * int(n);
        ys.push(level_point(n + 1)?.max(grow));
    }
    let points = ys
        .into_iter()
        .enumerate()
        .map(|(n, y)| (y, Rational::new((n as i64).into(), 2.into())))
        .collect();
    Ok(AdmissibleFunction::PiecewiseAffine(Pwa::new(
        points,
        PwaTail::Unknown,
    )?))
}

/// Constants with `g(x) <= A e^{Bx}` for all `x >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentialBound {
    #[serde(rename = "A", with = "serde_rational")]
    pub big_a: Rational,
    #[serde(rename = "B", with = "serde_rational")]
    pub big_b: Rational,
}

/// With `q >= sup_{y ≥ 1} g(y+1)/g(y)`: `g(x) <= g(1) q^{⌈x−1⌉} <= g(1) e^{(q−1)x}`.
pub fn exponential_bound(g: &AdmissibleFunction) -> Result<Option<ExponentialBound>> {
    let one = Rational::one();
    let q = match value_ratio(g, &one, &one)? {
        Extended::Finite(q) => q,
        Extended::Infinite => return Ok(None),
    };
    let big_a = eval_bits(g, &one, DEFAULT_BITS)?.hi().clone();
    Ok(Some(ExponentialBound {
        big_a,
        big_b: q - one,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{eval, lambda};
    use crate::numeric;
    use crate::rational::ratio;

    #[test]
    fn non_brv_stays_below_h_and_slopes_collapse() {
        let h = AdmissibleFunction::power(int(1)).unwrap();
        let g = construct_non_brv(&h, 8).unwrap();
        let p = g.as_pwa().unwrap();
        let pts = p.points();
        for (x, y) in pts.iter().skip(1) {
            assert!(y <= &eval(&h, x, 32).unwrap().lo().clone());
        }
        for n in 1..pts.len() - 1 {
            let s0 = (&pts[n].1 - &pts[n - 1].1) / (&pts[n].0 - &pts[n - 1].0);
            let s1 = (&pts[n + 1].1 - &pts[n].1) / (&pts[n + 1].0 - &pts[n].0);
            assert!(s0 / s1 >= int(n as i64));
        }
        let est = lambda(&g, &int(1), &int(0), 64).unwrap();
        assert!(est.upper.is_infinite());
    }

    #[test]
    fn exponential_bounds_hold_on_samples() {
        for g in [
            AdmissibleFunction::power(int(3)).unwrap(),
            AdmissibleFunction::exp(ratio(3, 2)).unwrap(),
            AdmissibleFunction::stretched_exp(int(1), ratio(1, 2)).unwrap(),
        ] {
            let b = exponential_bound(&g).unwrap().unwrap();
            for k in 0..12 {
                let x = Rational::new(1.into(), 4.into()) * int(1 << k) / int(8);
                let lhs = eval_bits(&g, &x, 64).unwrap();
                let rhs = numeric::exp(&(&b.big_b * &x), 64).scale(&b.big_a);
                assert!(lhs.hi() <= rhs.lo(), "{g:?} at {x}");
            }
        }
        assert!(
            exponential_bound(&AdmissibleFunction::stretched_exp(int(1), int(2)).unwrap())
                .unwrap()
                .is_none()
        );
    }
}
