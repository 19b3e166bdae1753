mod common;

use common::{rational, union};
use proptest::prelude::*;
use thicksum::interval::middle_thirds;
use thicksum::rational::{int, ratio};
use thicksum::{Interval, IntervalUnion, Rational};

fn is_canonical(k: &IntervalUnion) -> bool {
    k.parts().windows(2).all(|w| w[0].hi() < w[1].lo())
}

proptest! {
    #[test]
    fn normalize_is_canonical_and_idempotent(k in union(8)) {
        prop_assert!(is_canonical(&k));
        let again = IntervalUnion::normalize(k.parts().to_vec()).unwrap();
        prop_assert_eq!(&again, &k);
        prop_assert_eq!(IntervalUnion::from_canonical(k.parts().to_vec()).unwrap(), k);
    }

    #[test]
    fn membership_survives_normalization(
        raw in prop::collection::vec((rational(0, 6, 6), rational(0, 2, 6)), 1..6),
        x in rational(-1, 9, 12),
    ) {
        let parts: Vec<Interval> = raw
            .iter()
            .map(|(lo, len)| Interval::new(lo.clone(), lo + len).unwrap())
            .collect();
        let k = IntervalUnion::normalize(parts.clone()).unwrap();
        prop_assert_eq!(k.contains(&x), parts.iter().any(|p| p.contains(&x)));
    }

    #[test]
    fn sum_is_commutative_and_associative(a in union(4), b in union(4), c in union(3)) {
        prop_assert_eq!(a.minkowski_sum(&b), b.minkowski_sum(&a));
        prop_assert_eq!(
            a.minkowski_sum(&b).minkowski_sum(&c),
            a.minkowski_sum(&b.minkowski_sum(&c))
        );
    }

    #[test]
    fn sum_contains_pairwise_sums(
        a in union(4),
        b in union(4),
        s in 0usize..64,
        t in 0usize..64,
        u in rational(0, 1, 8),
        v in rational(0, 1, 8),
    ) {
        let p = &a.parts()[s % a.parts().len()];
        let q = &b.parts()[t % b.parts().len()];
        let x = p.lo() + p.length() * &u;
        let y = q.lo() + q.length() * &v;
        prop_assert!(a.minkowski_sum(&b).contains(&(x + y)));
    }

    #[test]
    fn sum_points_decompose(a in union(3), b in union(3), z in rational(0, 20, 8)) {
        // z lies in A + B iff some pair of parts sums over it
        let direct = a.parts().iter().any(|p| b.parts().iter().any(|q| p.add(q).contains(&z)));
        prop_assert_eq!(a.minkowski_sum(&b).contains(&z), direct);
    }

    #[test]
    fn affine_maps_commute_with_sums(
        a in union(4),
        b in union(4),
        scale in rational(1, 5, 4),
        shift in rational(-3, 3, 4),
    ) {
        let lhs = a.affine(&scale, &shift).unwrap().minkowski_sum(&b.affine(&scale, &shift).unwrap());
        let rhs = a.minkowski_sum(&b).affine(&scale, &(&shift * int(2))).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gaps_and_parts_tile_the_hull(k in union(8)) {
        let parts: Rational = k.parts().iter().map(|p| p.length()).sum();
        let gaps: Rational = k.gaps().iter().map(|g| g.length()).sum();
        prop_assert_eq!(parts + gaps, k.diam());
        prop_assert_eq!(k.gaps().len() + 1, k.parts().len());
        prop_assert_eq!(k.uncovered_within(k.min(), k.max()), k.gaps());
    }

    #[test]
    fn serde_round_trip(k in union(8)) {
        let s = serde_json::to_string(&k).unwrap();
        let back: IntervalUnion = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, k);
    }
}

#[test]
fn middle_thirds_sums_to_an_interval() {
    for depth in 0..=6 {
        let k = middle_thirds(depth);
        assert_eq!(
            k.minkowski_sum(&k),
            IntervalUnion::interval(Interval::new(int(0), int(2)).unwrap())
        );
    }
    assert_eq!(middle_thirds(3).parts().len(), 8);
    assert_eq!(middle_thirds(2).gaps()[0].lo(), &ratio(1, 9));
}

#[test]
fn rejects_malformed_unions() {
    assert!(IntervalUnion::normalize(vec![]).is_err());
    assert!(Interval::new(int(2), int(1)).is_err());
    let overlapping = vec![
        Interval::new(int(0), int(2)).unwrap(),
        Interval::new(int(1), int(3)).unwrap(),
    ];
    assert!(IntervalUnion::from_canonical(overlapping).is_err());
    assert!(serde_json::from_str::<IntervalUnion>(r#"{"parts":[["1","0"]]}"#).is_err());
}
