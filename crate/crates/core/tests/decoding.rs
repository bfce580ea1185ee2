mod common;

use common::{perturb, random_features, tiny_config};
use pcgn_core::data::{EncodedUser, EOS};
use pcgn_core::decoding::{beam_search, greedy_decode, rescore, DecodeConfig, ModelScorer, MASKED_TOKENS};
use pcgn_core::{Hypothesis, Model, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const V: usize = 6;

fn setup(seed: u64) -> (Model, Vec<usize>, EncodedUser) {
    let mut model = Model::build(tiny_config(Variant::PCGN, V, 3), seed).unwrap();
    perturb(&mut model, seed, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blog = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..V)).collect();
    let user = EncodedUser {
        features: random_features(&mut rng, 3),
        description: vec![rng.gen_range(1..V)],
    };
    (model, blog, user)
}

/// Every sequence the decoder can emit within `max_len`: finished ones end in
/// EOS, the rest have exactly `max_len` tokens.
fn enumerate(max_len: usize) -> Vec<Vec<usize>> {
    let emit: Vec<usize> = (0..V).filter(|t| !MASKED_TOKENS.contains(t)).collect();
    let mut out = Vec::new();
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for &t in &emit {
                let mut s: Vec<usize> = prefix.clone();
                s.push(t);
                if t == EOS {
                    out.push(s);
                } else {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    out.extend(frontier);
    out
}

#[test]
fn wide_beam_equals_exhaustive_enumeration() {
    let max_len = 3;
    let all = enumerate(max_len);
    assert_eq!(all.len(), 15);
    for seed in 0..50 {
        let (model, blog, user) = setup(seed);
        let mut scorer = ModelScorer::new(&model, &blog, &user).unwrap();
        let mut oracle: Vec<(f64, Vec<usize>)> = all
            .iter()
            .map(|s| (rescore(&mut scorer, s).unwrap(), s.clone()))
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let cfg = DecodeConfig {
            beam_size: 40,
            max_len,
            ..DecodeConfig::default()
        };
        let got = beam_search(&mut scorer, &cfg).unwrap();
        assert_eq!(got.len(), oracle.len());
        for (h, (lp, toks)) in got.iter().zip(&oracle) {
            assert_eq!(&h.tokens, toks, "seed {seed}");
            assert!((h.log_prob - lp).abs() < 1e-9);
            assert_eq!(h.finished, toks.last() == Some(&EOS));
        }
    }
}

#[test]
fn beam_of_one_is_greedy() {
    for seed in 0..50 {
        let (model, blog, user) = setup(seed);
        let mut scorer = ModelScorer::new(&model, &blog, &user).unwrap();
        let g = greedy_decode(&mut scorer, 8).unwrap();
        let cfg = DecodeConfig {
            beam_size: 1,
            max_len: 8,
            ..DecodeConfig::default()
        };
        let b = beam_search(&mut scorer, &cfg).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].tokens, g.tokens, "seed {seed}");
        assert!((b[0].log_prob - g.log_prob).abs() < 1e-12);
    }
}

#[test]
fn beam_output_is_sorted_rescorable_and_deterministic() {
    for seed in 0..10 {
        let (model, blog, user) = setup(seed);
        let cfg = DecodeConfig {
            beam_size: 4,
            max_len: 6,
            length_exponent: 0.7,
            early_stop: true,
        };
        let mut scorer = ModelScorer::new(&model, &blog, &user).unwrap();
        let a = beam_search(&mut scorer, &cfg).unwrap();
        let b = beam_search(&mut ModelScorer::new(&model, &blog, &user).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.len() <= 4 && !a.is_empty());
        for w in a.windows(2) {
            assert!(w[0].score(0.7) >= w[1].score(0.7));
        }
        for h in &a {
            assert!(h.tokens.iter().all(|t| !MASKED_TOKENS.contains(t)));
            let lp = rescore(&mut scorer, &h.tokens).unwrap();
            assert!((lp - h.log_prob).abs() < 1e-9);
        }
    }
}

fn best(hs: &[Hypothesis]) -> (Vec<usize>, u64) {
    (hs[0].tokens.clone(), hs[0].log_prob.to_bits())
}

#[test]
fn early_stopping_never_changes_the_best_hypothesis() {
    for seed in 0..20 {
        let (model, blog, user) = setup(seed);
        let mut scorer = ModelScorer::new(&model, &blog, &user).unwrap();
        let on = DecodeConfig {
            beam_size: 3,
            max_len: 10,
            ..DecodeConfig::default()
        };
        let off = DecodeConfig {
            early_stop: false,
            ..on.clone()
        };
        let a = beam_search(&mut scorer, &on).unwrap();
        let b = beam_search(&mut scorer, &off).unwrap();
        assert_eq!(best(&a), best(&b), "seed {seed}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let (model, blog, user) = setup(0);
    let mut scorer = ModelScorer::new(&model, &blog, &user).unwrap();
    for cfg in [
        DecodeConfig { beam_size: 0, ..DecodeConfig::default() },
        DecodeConfig { max_len: 0, ..DecodeConfig::default() },
        DecodeConfig { length_exponent: -1.0, ..DecodeConfig::default() },
    ] {
        assert!(beam_search(&mut scorer, &cfg).is_err());
    }
}
