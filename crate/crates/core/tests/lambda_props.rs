mod common;

use common::{positive, pwa, pwa_final_slope, pwa_periodic, rational};
use num_traits::Signed;
use proptest::prelude::*;
use thicksum::functions::{
    classify, eval_exact, lambda, lambda_limit, value_ratio_limit, Pwa, PwaTail,
};
use thicksum::rational::{int, ratio, to_f64};
use thicksum::{AdmissibleFunction, Classification, Extended, LambdaEstimate, Rational};

fn pwa_fn(p: &Pwa) -> AdmissibleFunction {
    AdmissibleFunction::PiecewiseAffine(p.clone())
}

fn exact(g: &AdmissibleFunction, gamma: &Rational, m: &Rational) -> Rational {
    let est = lambda(g, gamma, m, 64).unwrap();
    assert!(est.exact, "{est:?}");
    est.upper.finite().expect("finite").clone()
}

/// `sup D⁺g(x) / D⁻g(y)` over a finite candidate set that contains, for every
/// pair of affine pieces, points realizing their ratio whenever it is admissible.
/// Derivatives are difference quotients, so only `eval` is trusted.
fn derivative_oracle(p: &Pwa, gamma: &Rational, m: &Rational) -> Rational {
    let delta = ratio(1, 1 << 20);
    let h = &delta / int(4);
    let mut xs: Vec<Rational> = p.points().iter().map(|(x, _)| x.clone()).collect();
    let last = p.points().last().unwrap().0.clone();
    let reach = m.clone().max(last.clone()) + gamma + int(1);
    if let Some((start, width, _)) = p.period() {
        let pattern: Vec<Rational> = xs.iter().filter(|x| **x > start).cloned().collect();
        let mut shift = width.clone();
        while &last + &shift < &reach + &width * int(2) {
            xs.extend(pattern.iter().map(|x| x + &shift));
            shift += &width;
        }
    }
    xs.push(m.clone());
    xs.push(reach);
    let mut cands: Vec<Rational> = xs
        .iter()
        .flat_map(|b| [b - &delta, b.clone(), b + &delta])
        .filter(|x| x >= m)
        .collect();
    cands.sort();
    cands.dedup();
    let g = |x: &Rational| p.eval(x).unwrap();
    let mut best = int(1);
    for x in &cands {
        let dp = (g(&(x + &h)) - g(x)) / &h;
        for y in &cands {
            if y <= &h || (x - y).abs() > *gamma {
                continue;
            }
            let dm = (g(y) - g(&(y - &h))) / &h;
            best = best.max(&dp / dm);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn pwa_lambda_matches_derivative_oracle(
        p in pwa(5),
        gamma in positive(3, 4),
        m in rational(0, 6, 4),
    ) {
        prop_assert_eq!(exact(&pwa_fn(&p), &gamma, &m), derivative_oracle(&p, &gamma, &m));
    }

    #[test]
    fn monotone_in_window_and_start(
        p in pwa(5),
        g1 in positive(2, 4),
        g2 in positive(2, 4),
        m1 in rational(0, 4, 4),
        m2 in rational(0, 4, 4),
    ) {
        let g = pwa_fn(&p);
        let (small, large) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let (early, late) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let l = exact(&g, &small, &early);
        prop_assert!(l >= int(1));
        prop_assert!(exact(&g, &large, &early) >= l);
        prop_assert!(exact(&g, &small, &late) <= l);
    }

    #[test]
    fn submultiplicative_in_the_window(
        p in pwa(5),
        g1 in positive(2, 4),
        g2 in positive(2, 4),
        m in rational(0, 4, 4),
    ) {
        let g = pwa_fn(&p);
        let total = &g1 + &g2;
        prop_assert!(exact(&g, &total, &m) <= exact(&g, &g1, &m) * exact(&g, &g2, &m));
    }

    #[test]
    fn increments_compare_through_lambda(
        p in pwa(5),
        m in rational(0, 4, 4),
        gamma in positive(3, 4),
        u in prop::array::uniform4(rational(0, 1, 12)),
    ) {
        let g = pwa_fn(&p);
        let mut pts: Vec<Rational> = u.iter().map(|t| &m + &gamma * t).collect();
        let (a, b) = (pts[0].clone().min(pts[1].clone()), pts[0].clone().max(pts[1].clone()));
        let (c, d) = (pts[2].clone().min(pts[3].clone()), pts[2].clone().max(pts[3].clone()));
        prop_assume!(a < b && c < d);
        pts.sort();
        prop_assert!(&pts[3] - &pts[0] <= gamma);
        let gv = |x: &Rational| eval_exact(&g, x).unwrap();
        let lhs = (gv(&d) - gv(&c)) / (gv(&b) - gv(&a));
        let rhs = (&d - &c) / (&b - &a) / exact(&g, &gamma, &m);
        prop_assert!(lhs >= rhs, "{} < {}", lhs, rhs);
    }

    #[test]
    fn sum_is_bounded_by_the_larger_term(
        p in pwa(4),
        q in pwa(4),
        c in positive(3, 4),
        gamma in positive(2, 4),
        m in rational(0, 4, 4),
    ) {
        let sum = AdmissibleFunction::scaled_sum(vec![(int(1), pwa_fn(&p)), (c, pwa_fn(&q))]).unwrap();
        let est = lambda(&sum, &gamma, &m, 64).unwrap();
        let bound = exact(&pwa_fn(&p), &gamma, &m).max(exact(&pwa_fn(&q), &gamma, &m));
        prop_assert!(est.upper.finite().unwrap() <= &bound);
    }

    #[test]
    fn value_ratio_limit_is_controlled(p in pwa_periodic(4), gamma in positive(2, 4)) {
        let g = pwa_fn(&p);
        let two = lambda_limit(&g, &(&gamma * int(2)), 64).unwrap().upper;
        let one = lambda_limit(&g, &gamma, 64).unwrap().upper;
        let Extended::Finite(two) = two else { panic!() };
        let Extended::Finite(one) = one else { panic!() };
        prop_assert!(value_ratio_limit(&g, &gamma) <= Extended::Finite(two.clone()));
        prop_assert!(two <= &one * &one);
    }

    #[test]
    fn final_slope_tails_are_trivial(p in pwa_final_slope(5), gamma in positive(4, 4)) {
        prop_assert_eq!(
            lambda_limit(&pwa_fn(&p), &gamma, 64).unwrap(),
            LambdaEstimate::rational(int(1))
        );
        prop_assert_eq!(classify(&pwa_fn(&p)).unwrap(), Classification::Trv);
    }

    #[test]
    fn exponential_window_encloses_e_to_the_r_gamma(
        r in positive(3, 8),
        gamma in positive(3, 8),
        m in rational(0, 10, 4),
    ) {
        let est = lambda(&AdmissibleFunction::exp(r.clone()).unwrap(), &gamma, &m, 64).unwrap();
        let (lo, hi) = (est.lower.finite().unwrap(), est.upper.finite().unwrap());
        prop_assert!(hi - lo <= ratio(1, 1 << 40));
        let f = (to_f64(&r) * to_f64(&gamma)).exp();
        prop_assert!((to_f64(lo) - f).abs() <= 1e-12 * f);
    }

    #[test]
    fn power_windows_have_closed_forms(
        e in positive(4, 6),
        gamma in positive(3, 4),
        m in positive(6, 4),
    ) {
        let g = AdmissibleFunction::power(e.clone()).unwrap();
        let est = lambda(&g, &gamma, &m, 64).unwrap();
        let base = to_f64(&((&m + &gamma) / &m));
        let f = base.powf((to_f64(&e) - 1.0).abs());
        let (lo, hi) = (to_f64(est.lower.finite().unwrap()), to_f64(est.upper.finite().unwrap()));
        prop_assert!(lo <= f * (1.0 + 1e-12) && f <= hi * (1.0 + 1e-12));
        prop_assert_eq!(lambda_limit(&g, &gamma, 64).unwrap(), LambdaEstimate::rational(int(1)));
    }
}

#[test]
fn classification_of_families() {
    let exp = AdmissibleFunction::exp(ratio(1, 3)).unwrap();
    let power = AdmissibleFunction::power(ratio(5, 2)).unwrap();
    let fast = AdmissibleFunction::stretched_exp(int(1), int(2)).unwrap();
    let slow = AdmissibleFunction::stretched_exp(int(1), ratio(1, 2)).unwrap();
    assert_eq!(classify(&exp).unwrap(), Classification::BrvNotTrv);
    assert_eq!(classify(&power).unwrap(), Classification::Trv);
    assert_eq!(classify(&fast).unwrap(), Classification::NotBrv);
    assert_eq!(classify(&slow).unwrap(), Classification::Trv);
    let zigzag = Pwa::new(
        vec![(int(0), int(0)), (int(1), int(1)), (int(2), int(4))],
        PwaTail::Periodic { from_index: 0 },
    )
    .unwrap();
    assert_eq!(
        classify(&pwa_fn(&zigzag)).unwrap(),
        Classification::BrvNotTrv
    );
}

#[test]
fn oracle_agrees_on_a_hand_computed_case() {
    // slopes 4, 2, 1: the 4/1 pair sits exactly γ = 1 apart, which is not attained
    let p = Pwa::new(
        vec![(int(0), int(0)), (int(1), int(4)), (int(2), int(6))],
        PwaTail::FinalSlope(int(1)),
    )
    .unwrap();
    assert_eq!(derivative_oracle(&p, &int(1), &int(0)), int(2));
    assert_eq!(derivative_oracle(&p, &ratio(11, 10), &int(0)), int(4));
}
