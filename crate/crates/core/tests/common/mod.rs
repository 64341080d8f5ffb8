#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subsel::oracle::{random_ids, random_kernel};
use subsel::similarity::KernelTransform;
use subsel::submodular::{SubmodularSpec, Variant};
use subsel::{ScoreTable, SimilarityMatrix};

/// Random spec of the given variant on a clipped cosine kernel. Graph-cut
/// draws its penalty from [0, 0.5]; log-det uses `ridge`.
pub fn random_spec(rng: &mut ChaCha8Rng, variant: Variant, n: usize, ridge: f64) -> SubmodularSpec {
    let d = rng.gen_range(2..=6);
    let s = random_kernel(rng, n, d, KernelTransform::Clip);
    let third = (n / 3).max(1);
    SubmodularSpec::new(variant, s)
        .with_targets(random_ids(rng, n, third))
        .with_existing(random_ids(rng, n, third))
        .with_eta(rng.gen_range(0.0..2.0))
        .with_nu(rng.gen_range(0.0..2.0))
        .with_cut_penalty(rng.gen_range(0.0..=0.5))
        .with_ridge(ridge)
}

pub fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> ScoreTable {
    let u = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    ScoreTable::new(vec![1.0; n], vec![0.0; n], Some(u)).unwrap()
}

pub fn raw_kernel(rng: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let d = rng.gen_range(2..=6);
    random_kernel(rng, n, d, KernelTransform::Raw)
}

/// Random subset of `0..n`, sorted.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.4)).collect()
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
