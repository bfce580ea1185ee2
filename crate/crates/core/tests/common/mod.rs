#![allow(dead_code)]

use pcgn_core::data::{EncodedExample, EncodedUser, BOS, EOS};
use pcgn_core::{Model, ModelConfig, Tensor, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tiny_config(variant: Variant, vocab: usize, features: usize) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab,
        word_dim: 5,
        hidden: 6,
        layers: 2,
        desc_hidden: 4,
        user_dim: 3,
        feature_dim: features,
        variant,
    }
}

pub fn random_example(rng: &mut ChaCha8Rng, cfg: &ModelConfig, comment_len: usize) -> EncodedExample {
    let v = cfg.vocab_size;
    let blog_len = rng.gen_range(1..5);
    let desc_len = rng.gen_range(1..4);
    let mut comment = vec![BOS];
    comment.extend((0..comment_len).map(|_| rng.gen_range(4..v)));
    comment.push(EOS);
    EncodedExample {
        user_id: "u".into(),
        blog: (0..blog_len).map(|_| rng.gen_range(1..v)).collect(),
        comment,
        features: random_features(rng, cfg.feature_dim),
        description: (0..desc_len).map(|_| rng.gen_range(1..v)).collect(),
    }
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 }).collect()
}

pub fn user(ex: &EncodedExample) -> EncodedUser {
    EncodedUser {
        features: ex.features.clone(),
        description: ex.description.clone(),
    }
}

/// Scales every parameter up so that activations are far from linear.
pub fn perturb(model: &mut Model, seed: u64, scale: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = model.params().ids().collect();
    for id in ids {
        for v in model.params_mut().get_mut(id).data_mut() {
            *v += rng.gen_range(-scale..scale);
        }
    }
}

// ---- Independent forward pass over plain vectors -------------------------

fn p<'a>(m: &'a Model, name: &str) -> &'a Tensor {
    m.param(name).unwrap_or_else(|| panic!("missing parameter {name}"))
}

fn mv(a: &Tensor, x: &[f64]) -> Vec<f64> {
    let (r, c) = (a.shape()[0], a.shape()[1]);
    assert_eq!(c, x.len());
    (0..r)
        .map(|i| (0..c).map(|j| a.get2(i, j) * x[j]).sum())
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn lstm(m: &Model, prefix: &str, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = mv(p(m, &format!("{prefix}.w_ih")), x);
    let b = mv(p(m, &format!("{prefix}.w_hh")), h);
    let bias = p(m, &format!("{prefix}.b")).data();
    let n = h.len();
    let z: Vec<f64> = (0..4 * n).map(|k| a[k] + b[k] + bias[k]).collect();
    let mut h2 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    for k in 0..n {
        let i = sig(z[k]);
        let f = sig(z[n + k]);
        let g = z[2 * n + k].tanh();
        let o = sig(z[3 * n + k]);
        c2[k] = f * c[k] + i * g;
        h2[k] = o * c2[k].tanh();
    }
    (h2, c2)
}

fn bilstm(m: &Model, prefix: &str, layers: usize, hidden: usize, xs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut cur = xs;
    for l in 0..layers {
        let n = cur.len();
        let mut fwd = vec![Vec::new(); n];
        let (mut h, mut c) = (vec![0.0; hidden], vec![0.0; hidden]);
        for t in 0..n {
            (h, c) = lstm(m, &format!("{prefix}.l{l}.fwd"), &cur[t], &h, &c);
            fwd[t] = h.clone();
        }
        let mut bwd = vec![Vec::new(); n];
        let (mut h, mut c) = (vec![0.0; hidden], vec![0.0; hidden]);
        for t in (0..n).rev() {
            (h, c) = lstm(m, &format!("{prefix}.l{l}.bwd"), &cur[t], &h, &c);
            bwd[t] = h.clone();
        }
        cur = fwd.into_iter().zip(bwd).map(|(f, b)| [f, b].concat()).collect();
    }
    cur
}

fn attend(w: &Tensor, q: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
    // e_j = q^T W h_j
    let scores: Vec<f64> = states
        .iter()
        .map(|h| {
            let wh = mv(w, h);
            q.iter().zip(&wh).map(|(a, b)| a * b).sum()
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = ex.iter().sum();
    let mut ctx = vec![0.0; states[0].len()];
    for (a, h) in ex.iter().zip(states) {
        for (c, v) in ctx.iter_mut().zip(h) {
            *c += a / z * v;
        }
    }
    ctx
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

/// Logits of every teacher-forced step, computed without the tape.
pub fn oracle_logits(m: &Model, ex: &EncodedExample) -> Vec<Vec<f64>> {
    let cfg = m.config();
    let v = cfg.variant;
    let emb = p(m, "embedding");
    let embed = |i: usize| emb.row(i).to_vec();
    let blog = bilstm(m, "blog_enc", cfg.layers, cfg.hidden, ex.blog.iter().map(|&i| embed(i)).collect());
    let desc = v.use_coattention.then(|| {
        bilstm(m, "desc_enc", 1, cfg.desc_hidden, ex.description.iter().map(|&i| embed(i)).collect())
    });
    let vu = v.needs_user_vector().then(|| {
        let z = mv(p(m, "user_map.w"), &ex.features);
        z.iter()
            .zip(p(m, "user_map.b").data())
            .map(|(a, b)| (a + b).tanh())
            .collect::<Vec<f64>>()
    });
    let h = cfg.hidden;
    let summary = [blog.last().unwrap()[..h].to_vec(), blog[0][h..].to_vec()].concat();
    let mut hs: Vec<Vec<f64>> = (0..cfg.layers)
        .map(|l| {
            mv(p(m, &format!("dec_init.l{l}.w")), &summary)
                .iter()
                .zip(p(m, &format!("dec_init.l{l}.b")).data())
                .map(|(a, b)| (a + b).tanh())
                .collect()
        })
        .collect();
    let mut cs = vec![vec![0.0; h]; cfg.layers];
    let mut mem = if v.use_gated_memory { vu.clone() } else { None };

    let mut out = Vec::new();
    for t in 0..ex.comment.len() - 1 {
        let s_prev = hs[cfg.layers - 1].clone();
        let e = embed(ex.comment[t]);
        let cx = attend(p(m, "attn_blog"), &s_prev, &blog);
        let cd = desc.as_ref().map(|d| attend(p(m, "attn_desc"), &s_prev, d));
        let mut mo = None;
        if let Some(mprev) = &mem {
            let gu: Vec<f64> = mv(p(m, "mem_update"), &s_prev).into_iter().map(sig).collect();
            let mt: Vec<f64> = gu.iter().zip(mprev).map(|(g, x)| g * x).collect();
            let read_in = [s_prev.clone(), e.clone(), cx.clone()].concat();
            let go: Vec<f64> = mv(p(m, "mem_read"), &read_in).into_iter().map(sig).collect();
            mo = Some(go.iter().zip(&mt).map(|(g, x)| g * x).collect::<Vec<f64>>());
            mem = Some(mt);
        }
        let mut x = cx.clone();
        if let Some(cd) = &cd {
            x.extend(cd);
        }
        x.extend(&e);
        if v.use_user_embedding {
            x.extend(vu.as_ref().unwrap());
        }
        if let Some(mo) = &mo {
            x.extend(mo);
        }
        for l in 0..cfg.layers {
            let (hn, cn) = lstm(m, &format!("dec.l{l}"), &x, &hs[l], &cs[l]);
            hs[l] = hn.clone();
            cs[l] = cn;
            x = hn;
        }
        let logits = if v.use_external {
            let joined = [vu.clone().unwrap(), cd.unwrap()].concat();
            let r = mv(p(m, "ext_user"), &joined);
            mv(p(m, "ext_out"), &[x, r].concat())
        } else {
            mv(p(m, "out"), &x)
        };
        out.push(logits);
    }
    out
}

pub fn oracle_loss(m: &Model, ex: &EncodedExample) -> f64 {
    oracle_logits(m, ex)
        .iter()
        .enumerate()
        .map(|(t, l)| -log_softmax_at(l, ex.comment[t + 1]))
        .sum()
}

/// Encoded synthetic corpus with its vocabulary size and feature width.
pub fn synthetic_examples(records: usize, users: usize, seed: u64) -> (Vec<EncodedExample>, usize, usize) {
    use pcgn_core::data::{build_vocab, encode_record, fit_schema, DEFAULT_AGE_DIVISOR};
    let raw = pcgn_core::synthetic::generate(records, users, seed).unwrap();
    let vocab = build_vocab(&raw, 1000).unwrap();
    let schema = fit_schema(&raw, DEFAULT_AGE_DIVISOR).unwrap();
    let examples = raw.iter().map(|r| encode_record(r, &vocab, &schema, 0)).collect();
    (examples, vocab.len(), schema.width())
}
