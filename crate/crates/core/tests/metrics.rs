use pcgn_core::metrics::{bleu2, meteor_lite, meteor_pair};
use pcgn_core::EvalPair;
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..6, 0..8)
}

fn corpus() -> impl Strategy<Value = Vec<EvalPair<u8>>> {
    prop::collection::vec((sentence(), sentence()).prop_map(|(h, r)| EvalPair::new(h, r)), 1..6)
}

proptest! {
    #[test]
    fn scores_lie_in_the_unit_interval(pairs in corpus()) {
        let b = bleu2(&pairs).unwrap();
        let m = meteor_lite(&pairs).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn identical_corpora_score_one(refs in prop::collection::vec(prop::collection::vec(0u8..6, 2..8), 1..5)) {
        let pairs: Vec<_> = refs.iter().map(|r| EvalPair::new(r.clone(), r.clone())).collect();
        prop_assert!((bleu2(&pairs).unwrap() - 1.0).abs() < 1e-12);
        for r in &refs {
            let want = 1.0 - 0.5 / (r.len() as f64).powi(3);
            prop_assert!((meteor_pair(r, r) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn invariant_under_token_renaming(pairs in corpus(), shift in 1u8..200) {
        let renamed: Vec<EvalPair<u8>> = pairs
            .iter()
            .map(|p| EvalPair::new(
                p.hypothesis.iter().map(|t| t.wrapping_add(shift)).collect(),
                p.reference.iter().map(|t| t.wrapping_add(shift)).collect(),
            ))
            .collect();
        prop_assert_eq!(bleu2(&pairs).unwrap(), bleu2(&renamed).unwrap());
        prop_assert_eq!(meteor_lite(&pairs).unwrap(), meteor_lite(&renamed).unwrap());
    }

    #[test]
    fn disjoint_vocabularies_score_zero(h in prop::collection::vec(0u8..5, 1..8), r in prop::collection::vec(5u8..10, 1..8)) {
        let pairs = [EvalPair::new(h, r)];
        prop_assert_eq!(bleu2(&pairs).unwrap(), 0.0);
        prop_assert_eq!(meteor_lite(&pairs).unwrap(), 0.0);
    }
}
