mod common;

use common::{positive, pwa_final_slope};
use proptest::prelude::*;
use thicksum::fragmentation::{make_cantor_fragments, make_collapse_counterexample, make_faa};
use thicksum::halfline::{
    chain_certify, envelopes_for, image_prefix_for_horizon, phase_scan, stratum_refute,
    sum_coverage_upto, ChainParams, CoverageKind,
};
use thicksum::rational::{int, ratio};
use thicksum::{
    AdmissibleFunction, Fragmentation, HalfLineVerdict, Interval, LogAffine, Rational, Verdict,
};

const BITS: u32 = 64;

fn function() -> impl Strategy<Value = AdmissibleFunction> {
    prop_oneof![
        Just(AdmissibleFunction::identity()),
        (1i64..=3).prop_map(|m| AdmissibleFunction::power(int(m)).unwrap()),
        pwa_final_slope(3).prop_map(AdmissibleFunction::PiecewiseAffine),
    ]
}

fn covered(f: &Fragmentation, g: &AdmissibleFunction, from: &Rational, to: &Rational) -> bool {
    let frags = image_prefix_for_horizon(f, g, CoverageKind::Exact, to, BITS).unwrap();
    sum_coverage_upto(&frags, CoverageKind::Exact, from, to)
        .unwrap()
        .covered
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn chain_certificates_hold_on_the_exact_sum(
        big_a in positive(3, 2).prop_map(|x| x + int(1)),
        a in positive(2, 4),
        g in function(),
    ) {
        let f = make_faa(&big_a, &a, 2).unwrap();
        let params = ChainParams { big_a: big_a.clone(), a: &a * int(2), eps: int(1), skip: 0 };
        let v = chain_certify(&f, &g, &params, 6).unwrap();
        if let Verdict::CertifiedHalfLine { from, .. } = &v.verdict {
            let to = from * int(2) + int(8);
            prop_assume!(to <= int(2000));
            prop_assert!(covered(&f, &g, from, &to), "certified from {from}");
        }
    }

    #[test]
    fn chain_certificates_hold_on_thick_cantor_fragments(
        alpha_den in 4i64..=7,
        g in function(),
    ) {
        let alpha = ratio(1, alpha_den);
        let (big_a, a) = (int(2), int(1));
        let f = make_cantor_fragments(&big_a, &a, &alpha, 1, 2).unwrap();
        let eps = (Rational::from_integer(1.into()) - &alpha) / (&alpha * int(2)) - int(1);
        let params = ChainParams { big_a, a: int(2), eps, skip: 0 };
        let v = chain_certify(&f, &g, &params, 6).unwrap();
        if let Verdict::CertifiedHalfLine { from, .. } = &v.verdict {
            let to = from * int(2) + int(8);
            prop_assume!(to <= int(2000));
            prop_assert!(covered(&f, &g, from, &to), "certified from {from}");
        }
    }

    #[test]
    fn refutation_witnesses_miss_the_outer_sum(
        big_a in positive(2, 2).prop_map(|x| x + int(1)),
        a in positive(2, 2).prop_map(|x| x + int(1)),
        r in positive(2, 2).prop_map(|x| x + int(1)),
    ) {
        let f = make_faa(&big_a, &a, 1).unwrap();
        let g = AdmissibleFunction::exp(r).unwrap();
        let env = envelopes_for(&f, &g, 2, 4).unwrap();
        let v = stratum_refute(&env, 6).unwrap();
        if let Verdict::CertifiedNoHalfLine { gap_witnesses, .. } = &v.verdict {
            prop_assert!(!gap_witnesses.is_empty());
            let to = gap_witnesses.iter().map(|w| w.hi().clone()).max().unwrap();
            let frags = image_prefix_for_horizon(&f, &g, CoverageKind::Outer, &to, BITS).unwrap();
            let sum = sum_coverage_upto(&frags, CoverageKind::Outer, &int(0), &to).unwrap().sum;
            for w in gap_witnesses {
                prop_assert!(sum.misses_open(w.lo(), w.hi()), "witness {w:?} meets the sum");
            }
        }
    }

    #[test]
    fn verdicts_round_trip_through_json(
        from in positive(50, 8),
        n0 in 0usize..20,
        gaps in prop::collection::vec((positive(50, 8), positive(3, 8)), 0..4),
    ) {
        let gap_witnesses = gaps
            .into_iter()
            .map(|(lo, len)| Interval::new(lo.clone(), lo + len).unwrap())
            .collect();
        for v in [
            Verdict::CertifiedHalfLine { from: from.clone(), n0 },
            Verdict::CertifiedNoHalfLine { n0, gap_witnesses },
        ] {
            let v = HalfLineVerdict::bare(v);
            let text = serde_json::to_string(&v).unwrap();
            let back: HalfLineVerdict = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, v);
        }
    }

    #[test]
    fn functions_round_trip_through_json(g in function()) {
        let text = serde_json::to_string(&g).unwrap();
        let back: AdmissibleFunction = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn identity_on_faa_certifies_and_covers() {
    let f = make_faa(&int(2), &int(1), 2).unwrap();
    let g = AdmissibleFunction::identity();
    let params = ChainParams {
        big_a: int(2),
        a: int(2),
        eps: int(1),
        skip: 0,
    };
    let v = chain_certify(&f, &g, &params, 6).unwrap();
    let Verdict::CertifiedHalfLine { from, .. } = v.verdict else {
        panic!("expected a certificate, got {:?}", v.verdict);
    };
    assert!(covered(&f, &g, &from, &(&from + int(40))));
}

#[test]
fn fragmentations_round_trip_through_json() {
    let f = make_faa(&int(3), &ratio(1, 2), 3).unwrap();
    let text = serde_json::to_string(&f).unwrap();
    let back: Fragmentation = serde_json::from_str(&text).unwrap();
    assert_eq!(back, f);
    let c = make_cantor_fragments(&int(2), &int(1), &ratio(1, 5), 2, 2).unwrap();
    let back: Fragmentation = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn collapse_sum_stays_near_the_integers() {
    let eps = ratio(1, 8);
    let f = make_faa(&int(1), &ratio(1, 2), 1).unwrap();
    let g = make_collapse_counterexample(&f, &eps).unwrap();
    let to = int(12);
    let frags = image_prefix_for_horizon(&f, &g, CoverageKind::Exact, &to, BITS).unwrap();
    let sum = sum_coverage_upto(&frags, CoverageKind::Exact, &int(0), &to)
        .unwrap()
        .sum;
    for k in 0..12 {
        assert!(sum.misses_open(&(int(k) + &eps * int(2)), &(int(k + 1) - &eps * int(2))));
    }
    assert!(make_collapse_counterexample(&f, &ratio(1, 3)).is_err());
}

#[test]
fn phase_scan_is_ordered_and_consistent() {
    let rs = [ratio(1, 2), ratio(1, 4), int(1)];
    let as_: Vec<LogAffine> = ["1", "1/2", "ln2"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let rows = phase_scan(&int(10), &rs, &as_, 20).unwrap();
    assert_eq!(rows.len(), 9);
    let again = phase_scan(&int(10), &rs, &as_, 20).unwrap();
    for (x, y) in rows.iter().zip(&again) {
        assert_eq!(
            (&x.r, &x.a, &x.verdict, x.n0),
            (&y.r, &y.a, &y.verdict, y.n0)
        );
    }
    for row in &rows {
        match row.verdict.as_str() {
            "CertifiedNoHalfLine" => assert!(row.first_gap.is_some(), "{row:?}"),
            "CertifiedHalfLine" => assert!(row.n0.is_some(), "{row:?}"),
            "Inconclusive" => {}
            other => panic!("unexpected verdict {other}"),
        }
    }
    let half = rows.iter().find(|r| r.r == "1/2" && r.a == "1").unwrap();
    assert_eq!(half.verdict, "CertifiedHalfLine");
}
