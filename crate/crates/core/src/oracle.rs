//! Exhaustive search over all `k`-subsets, used to measure how close the
//! greedy engines get to the true optimum on small instances.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::evaluation::objective_value;
use crate::greedy::{greedy_maximize, utility_diversity_select, GreedyConfig, GreedyMode};
use crate::model::{EmbeddingMatrix, ScoreTable, SimilarityMatrix};
use crate::similarity::{apply_transform, cosine_similarity_matrix, KernelTransform};
use crate::submodular::SubmodularSpec;

/// `1 − 1/e`.
pub const APPROX_BOUND: f64 = 0.6321205588285577;

/// Largest number of subsets [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

const RATIO_TOL: f64 = 1e-9;

/// Anything the oracle can evaluate on a subset of `0..ground_size()`.
pub trait SetFunction {
    fn ground_size(&self) -> usize;
    fn value(&self, set: &[usize]) -> Result<f64>;
}

impl SetFunction for SubmodularSpec {
    fn ground_size(&self) -> usize {
        self.n()
    }

    fn value(&self, set: &[usize]) -> Result<f64> {
        self.eval(set)
    }
}

/// The utility/diversity objective `λ ΣU + (1 − λ) D(A)` as a set function.
#[derive(Debug, Clone, Copy)]
pub struct BalancedObjective<'a> {
    pub scores: &'a ScoreTable,
    pub similarity: &'a SimilarityMatrix,
    pub lambda: f64,
}

impl SetFunction for BalancedObjective<'_> {
    fn ground_size(&self) -> usize {
        self.similarity.n()
    }

    fn value(&self, set: &[usize]) -> Result<f64> {
        objective_value(self.scores, self.similarity, set, self.lambda)
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step
        c = match c.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    c
}

fn guard(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::BudgetTooLarge { budget: k, n });
    }
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            n,
            k,
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

/// Best `k`-subset by exhaustive enumeration in lexicographic order; ties go
/// to the lexicographically smallest subset.
pub fn brute_force_optimum<F: SetFunction + ?Sized>(f: &F, k: usize) -> Result<(Vec<usize>, f64)> {
    let n = f.ground_size();
    guard(n, k)?;
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best_set = idx.clone();
    let mut best = f.value(&idx)?;
    // advance to the next combination
    while let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) {
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
        let v = f.value(&idx)?;
        if v > best {
            best = v;
            best_set.clone_from(&idx);
        }
    }
    Ok((best_set, best))
}

/// Outcome of comparing one greedy run against the exhaustive optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub label: String,
    pub n: usize,
    pub k: usize,
    pub opt_value: f64,
    pub opt_set: Vec<usize>,
    pub algo_value: f64,
    pub algo_set: Vec<usize>,
    /// `algo / opt`, defined when `opt > 0`.
    pub ratio: Option<f64>,
    pub bound: f64,
    /// `ratio >= bound − 1e-9`; when `opt <= 0` the ratio is meaningless and
    /// greedy must match the optimum instead.
    pub satisfied: bool,
    /// Whether the bound is a theorem for this objective (monotone
    /// submodular) rather than only an observation.
    pub asserted: bool,
}

impl OracleReport {
    fn new(label: String, n: usize, k: usize, opt: (Vec<usize>, f64), algo: (Vec<usize>, f64), asserted: bool) -> Self {
        let (opt_set, opt_value) = opt;
        let (algo_set, algo_value) = algo;
        let ratio = (opt_value > 0.0).then(|| algo_value / opt_value);
        let satisfied = match ratio {
            Some(r) => r >= APPROX_BOUND - RATIO_TOL,
            None => algo_value >= opt_value - RATIO_TOL,
        };
        Self {
            label,
            n,
            k,
            opt_value,
            opt_set,
            algo_value,
            algo_set,
            ratio,
            bound: APPROX_BOUND,
            satisfied,
            asserted,
        }
    }

    /// True unless the bound is asserted and violated.
    pub fn passed(&self) -> bool {
        self.satisfied || !self.asserted
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let ratio = self.ratio.map_or_else(|| "undefined".to_string(), |r| format!("{r:.12}"));
        write!(
            f,
            "objective={} n={} k={} opt={:.12} opt_set={} algo={:.12} algo_set={} ratio={} bound={} satisfied={} asserted={}",
            self.label,
            self.n,
            self.k,
            self.opt_value,
            ids(&self.opt_set),
            self.algo_value,
            ids(&self.algo_set),
            ratio,
            self.bound,
            self.satisfied,
            self.asserted,
        )
    }
}

/// Runs greedy and brute force on the same submodular objective.
pub fn certify(spec: &SubmodularSpec, k: usize, mode: GreedyMode) -> Result<OracleReport> {
    guard(spec.n(), k)?;
    let greedy = greedy_maximize(spec, &GreedyConfig::new(k).with_mode(mode))?;
    let opt = brute_force_optimum(spec, k)?;
    Ok(OracleReport::new(
        spec.variant.to_string(),
        spec.n(),
        k,
        opt,
        (greedy.selected, greedy.objective),
        spec.is_monotone_submodular()?,
    ))
}

/// Same comparison for the utility/diversity loop. The diversity term is
/// supermodular, so the ratio is recorded but never asserted.
pub fn certify_balanced(
    scores: &ScoreTable,
    s: &SimilarityMatrix,
    lambda: f64,
    k: usize,
) -> Result<OracleReport> {
    guard(s.n(), k)?;
    let greedy = utility_diversity_select(scores, s, &GreedyConfig::new(k).with_lambda(lambda))?;
    let objective = BalancedObjective {
        scores,
        similarity: s,
        lambda,
    };
    let opt = brute_force_optimum(&objective, k)?;
    Ok(OracleReport::new(
        "utility-diversity".into(),
        s.n(),
        k,
        opt,
        (greedy.selected, greedy.objective),
        false,
    ))
}

/// Cosine kernel of `n` random embeddings in `[-1, 1]^d`, after `transform`.
pub fn random_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    transform: KernelTransform,
) -> SimilarityMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| loop {
            let row: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if row.iter().any(|v| v.abs() > 1e-6) {
                break row;
            }
        })
        .collect();
    let e = EmbeddingMatrix::from_rows(&rows).expect("rows are finite and non-zero");
    let s = cosine_similarity_matrix(&e).expect("rows have positive norm");
    apply_transform(&s, transform)
}

/// A random non-empty subset of `0..n` with at most `max` ids, sorted.
pub fn random_ids<R: Rng + ?Sized>(rng: &mut R, n: usize, max: usize) -> Vec<usize> {
    let size = rng.gen_range(1..=max.min(n).max(1));
    let mut ids = rand::seq::index::sample(rng, n, size).into_vec();
    ids.sort_unstable();
    ids
}
