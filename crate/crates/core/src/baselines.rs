//! Comparison baselines: seeded uniform sampling and greedy DPP MAP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::greedy::{greedy_maximize, GreedyConfig};
use crate::model::{SelectionResult, SimilarityMatrix};
use crate::submodular::{SubmodularSpec, Variant};

/// Generator behind [`random_select`]: `ChaCha8Rng::seed_from_u64(seed)`.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomConfig {
    pub seed: u64,
    pub budget: usize,
}

/// Uniform sample of `budget` ids without replacement: the first `budget`
/// swaps of a Fisher–Yates shuffle of `0..n`.
pub fn random_select(n: usize, cfg: &RandomConfig) -> Result<SelectionResult> {
    if cfg.budget > n {
        return Err(Error::BudgetTooLarge {
            budget: cfg.budget,
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ids: Vec<usize> = (0..n).collect();
    for i in 0..cfg.budget {
        let j = rng.gen_range(i..n);
        ids.swap(i, j);
    }
    ids.truncate(cfg.budget);
    let params = [
        ("seed".to_string(), cfg.seed.to_string()),
        ("rng".to_string(), RNG_NAME.to_string()),
    ]
    .into();
    Ok(SelectionResult {
        method: "random".into(),
        budget: cfg.budget,
        gains: vec![0.0; ids.len()],
        selected: ids,
        objective: 0.0,
        params,
    })
}

/// Greedy MAP for a DPP with kernel `S + ridge·I`: greedy log-determinant
/// maximization, tagged as method `dpp`.
pub fn dpp_greedy_select(s: &SimilarityMatrix, budget: usize, ridge: f64) -> Result<SelectionResult> {
    dpp_greedy_with(s, &GreedyConfig::new(budget), ridge)
}

pub fn dpp_greedy_with(s: &SimilarityMatrix, cfg: &GreedyConfig, ridge: f64) -> Result<SelectionResult> {
    let spec = SubmodularSpec::new(Variant::LogDeterminant, s.clone()).with_ridge(ridge);
    let mut r = greedy_maximize(&spec, cfg)?;
    r.method = "dpp".into();
    Ok(r)
}
