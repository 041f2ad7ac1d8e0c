use opcumulant::expr::{rational, Bracket, Expression};
use opcumulant::fermi::{compute_rdm, FockVector};
use opcumulant::numeric::{
    build_random_model, build_split_model, evaluate, max_norm, verify_cluster_property,
};
use opcumulant::ordering::{canonical_factor_order, OrderingMapKind};
use opcumulant::transforms::{cumulants_from_moments, InversionFormula};
use proptest::prelude::*;

fn map_strategy() -> impl Strategy<Value = OrderingMapKind> {
    prop::sample::select(OrderingMapKind::ALL.to_vec())
}

/// Random set partition of 1..=n encoded as a block label per atom.
fn partition_strategy(n: usize) -> impl Strategy<Value = Vec<Bracket>> {
    prop::collection::vec(0..n, n).prop_map(move |labels| {
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, l) in labels.iter().enumerate() {
            blocks[*l].push(i + 1);
        }
        blocks
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|b| Bracket::cumulant(&b))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factor_order_is_idempotent(factors in partition_strategy(6), map in map_strategy()) {
        if let Ok(once) = canonical_factor_order(&factors, map) {
            let twice = canonical_factor_order(&once, map).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn factor_order_ignores_input_order(factors in partition_strategy(5), map in map_strategy()) {
        let mut reversed = factors.clone();
        reversed.reverse();
        prop_assert_eq!(
            canonical_factor_order(&factors, map).ok(),
            canonical_factor_order(&reversed, map).ok()
        );
    }

    #[test]
    fn evaluation_is_linear(seed in 0u64..1000, a in -5i64..5, b in 1i64..5) {
        let model = build_random_model(3, 3, 2, seed).unwrap();
        let x = Expression::bracket(Bracket::moment(&[1, 2, 3]));
        let y = Expression::from_terms([(rational(1, 1), vec![Bracket::moment(&[1, 3]), Bracket::moment(&[2])])]);
        let k = rational(a, b);
        let lhs = evaluate(&x.scale(&k).add(&y), &model, OrderingMapKind::Pto).unwrap();
        let kx = evaluate(&x, &model, OrderingMapKind::Pto).unwrap() * num_complex::Complex64::new(a as f64 / b as f64, 0.0);
        let rhs = kx + evaluate(&y, &model, OrderingMapKind::Pto).unwrap();
        prop_assert!(max_norm(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn cluster_property_holds_for_random_split_models(
        seed in 0u64..10_000,
        split in 1usize..4,
        tto in any::<bool>(),
    ) {
        let map = if tto { OrderingMapKind::Tto } else { OrderingMapKind::Pto };
        let model = build_split_model(3, 4, split, 2, (seed, seed ^ 0xABCD)).unwrap();
        let r = verify_cluster_property(4, map, &model, 1e-10).unwrap();
        prop_assert!(r.pass, "rel {}", r.max_rel_deviation);
    }

    #[test]
    fn direct_and_recursive_inversions_agree_numerically(seed in 0u64..10_000, n in 2usize..5) {
        let model = build_random_model(3, n, 2, seed).unwrap();
        let rec = cumulants_from_moments(n, OrderingMapKind::Tto, InversionFormula::Recursive).unwrap();
        let direct = cumulants_from_moments(n, OrderingMapKind::Tto, InversionFormula::TtoDirect).unwrap();
        let a = evaluate(&rec, &model, OrderingMapKind::Tto).unwrap();
        let b = evaluate(&direct, &model, OrderingMapKind::Tto).unwrap();
        prop_assert!(max_norm(&(&a - &b)) <= 1e-10 * max_norm(&b).max(1.0));
    }

    #[test]
    fn rdm_trace_is_binomial(seed in 0u64..1000, m in 3usize..7, p in 1usize..3) {
        let n = (m / 2).max(p);
        let state = FockVector::random(m, n, seed).unwrap();
        let d = compute_rdm(&state, p).unwrap();
        let want = (0..p).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        prop_assert!((d.trace().re - want).abs() < 1e-10);
    }
}
