//! Shared generators and independent oracles for the integration suites.
//!
//! The oracles recompute divergences and centroid energies with plain
//! per-document loops, deliberately sharing no code with the aggregated
//! implementations under test.

#![allow(dead_code)]

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sklnb::centroid::ClassCorpus;
use sklnb::corpus::{
    smooth_normalize, CountVector, Distribution, LabeledDocument, SmoothingConfig,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random point of the open simplex: normalized standard exponentials.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = v.iter().sum();
        if total > 0.0 {
            for x in &mut v {
                *x /= total;
            }
            if v.iter().all(|x| *x > 0.0) {
                return v;
            }
        }
    }
}

/// Random simplex point blended toward uniform, so every coordinate is at
/// least `0.1 / n`. Comfortably interior for finite-difference probes.
pub fn random_interior_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v = random_simplex(rng, n);
    let unif = 1.0 / n as f64;
    for x in &mut v {
        *x = 0.9 * *x + 0.1 * unif;
    }
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// A class of `n_docs` documents over a `dim`-word vocabulary, each built
/// from small random token counts and Laplace-smoothed with alpha = 1.
pub fn random_class(rng: &mut ChaCha8Rng, dim: usize, n_docs: usize) -> ClassCorpus {
    let smoothing = SmoothingConfig::default();
    let mut docs = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let mut counts: Vec<u64> = (0..dim).map(|_| rng.random_range(0..=9)).collect();
        if counts.iter().all(|c| *c == 0) {
            let hot = rng.random_range(0..dim);
            counts[hot] = 1;
        }
        let pairs = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, c)| (i, *c));
        let cv = CountVector::from_pairs(pairs).expect("counts have a positive entry");
        docs.push(smooth_normalize(&cv, dim, &smoothing).expect("smoothing cannot fail here"));
    }
    ClassCorpus::from_distributions("random", docs).expect("documents share a dimension")
}

/// Direct-summation KL divergence in nats, `0 ln 0 = 0` on the p side.
pub fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(pi, qi)| if *pi == 0.0 { 0.0 } else { pi * (pi / qi).ln() })
        .sum()
}

/// Direct-summation symmetric KL: `kl(p,q) + kl(q,p)`.
pub fn naive_skl(p: &[f64], q: &[f64]) -> f64 {
    naive_kl(p, q) + naive_kl(q, p)
}

/// Direct-summation centroid objective: total symmetric KL from every
/// document to `rho`. Accepts off-simplex `rho` so it can be used for
/// finite differencing of the unconstrained objective.
pub fn naive_energy(rho: &[f64], docs: &[Distribution]) -> f64 {
    docs.iter().map(|d| naive_skl(d.as_slice(), rho)).sum()
}

/// Two overlapping multinomial classes, `alpha` and `beta`, over the words
/// `w000 .. w{vocab-1}`. Each class up-weights its half of the vocabulary
/// by `1 + 9 * separation`: 0 makes the classes identical, 1 nearly
/// disjoint. Documents alternate between the classes.
pub fn overlapping_corpus(
    seed: u64,
    n_docs: usize,
    vocab: usize,
    tokens_per_doc: usize,
    separation: f64,
) -> Vec<LabeledDocument> {
    let mut rng = rng(seed);
    let half = vocab / 2;
    let weight = |class: usize, w: usize| -> f64 {
        let favored = (class == 0) == (w < half);
        if favored {
            1.0 + separation * 9.0
        } else {
            1.0
        }
    };
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let class = d % 2;
        let weights: Vec<f64> = (0..vocab).map(|w| weight(class, w)).collect();
        let total: f64 = weights.iter().sum();
        let mut text = String::new();
        for _ in 0..tokens_per_doc {
            let mut u = rng.random::<f64>() * total;
            let mut idx = 0;
            for (w, wt) in weights.iter().enumerate() {
                u -= wt;
                if u <= 0.0 {
                    idx = w;
                    break;
                }
            }
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&format!("w{idx:03}"));
        }
        docs.push(LabeledDocument::new(
            if class == 0 { "alpha" } else { "beta" },
            text,
        ));
    }
    docs
}

/// Writes documents in the JSONL corpus format the CLI reads.
pub fn write_jsonl(path: &Path, docs: &[LabeledDocument]) {
    let mut out = String::new();
    for d in docs {
        let line = serde_json::json!({ "label": d.label, "text": d.text });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).expect("write corpus");
}
