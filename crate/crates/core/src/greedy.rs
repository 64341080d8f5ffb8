//! Greedy selection under a cardinality budget.
//!
//! [`greedy_maximize`] picks the candidate with the largest marginal gain at
//! every step, either by scanning all candidates (`Naive`) or with stale
//! upper bounds in a max-heap (`Lazy`). Both break ties toward the lowest id,
//! so for submodular functions they return identical sequences.
//!
//! [`utility_diversity_select`] runs the utility/diversity balanced loop:
//! each step takes `argmax λ·U(x) + (1−λ)·Σ_{y∈A} (1 − S_xy)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::objective_value;
use crate::model::{ScoreTable, SelectionResult, SimilarityMatrix};
use crate::submodular::SubmodularSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyMode {
    Naive,
    #[default]
    Lazy,
}

impl fmt::Display for GreedyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GreedyMode::Naive => "naive",
            GreedyMode::Lazy => "lazy",
        })
    }
}

impl FromStr for GreedyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(GreedyMode::Naive),
            "lazy" => Ok(GreedyMode::Lazy),
            other => Err(Error::domain(format!("unknown greedy mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    pub budget: usize,
    pub mode: GreedyMode,
    /// Utility/diversity trade-off in `[0, 1]`; only used by
    /// [`utility_diversity_select`].
    pub lambda: f64,
}

pub const DEFAULT_LAMBDA: f64 = 0.5;

impl GreedyConfig {
    pub fn new(budget: usize) -> Self {
        Self {
            budget,
            mode: GreedyMode::default(),
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn with_mode(mut self, mode: GreedyMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.budget > n {
            return Err(Error::BudgetTooLarge {
                budget: self.budget,
                n,
            });
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::domain(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// Heap entry: larger gain first, then lower id.
#[derive(Debug)]
struct Bound {
    gain: f64,
    id: usize,
    step: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Greedy maximization of a submodular set function under `|A| <= budget`.
pub fn greedy_maximize(spec: &SubmodularSpec, cfg: &GreedyConfig) -> Result<SelectionResult> {
    let n = spec.n();
    cfg.validate(n)?;
    let mut state = spec.init_state()?;
    let mut gains = Vec::with_capacity(cfg.budget);

    match cfg.mode {
        GreedyMode::Naive => {
            for _ in 0..cfg.budget {
                let mut best: Option<(usize, f64)> = None;
                for v in (0..n).filter(|&v| !state.contains(v)) {
                    let g = spec.marginal_gain(&state, v)?;
                    if best.is_none_or(|(_, bg)| g > bg) {
                        best = Some((v, g));
                    }
                }
                let (v, g) = best.expect("budget <= n leaves a candidate");
                spec.commit(&mut state, v)?;
                gains.push(g);
            }
        }
        GreedyMode::Lazy => {
            let mut heap = BinaryHeap::with_capacity(n);
            if cfg.budget > 0 {
                for id in 0..n {
                    heap.push(Bound {
                        gain: spec.marginal_gain(&state, id)?,
                        id,
                        step: 0,
                    });
                }
            }
            for step in 0..cfg.budget {
                loop {
                    let top = heap.pop().expect("budget <= n leaves a candidate");
                    if top.step == step {
                        spec.commit(&mut state, top.id)?;
                        gains.push(top.gain);
                        break;
                    }
                    heap.push(Bound {
                        gain: spec.marginal_gain(&state, top.id)?,
                        id: top.id,
                        step,
                    });
                }
            }
        }
    }

    let selected = state.members().to_vec();
    let objective = spec.eval(&selected)?;
    let mut params = spec.params();
    params.insert("mode".into(), cfg.mode.to_string());
    Ok(SelectionResult {
        method: "submodular".into(),
        budget: cfg.budget,
        selected,
        gains,
        objective,
        params,
    })
}

/// Utility/diversity balanced selection. The step score uses a single sum
/// over the current selection; the reported objective is
/// [`objective_value`], whose diversity term counts ordered pairs.
pub fn utility_diversity_select(
    scores: &ScoreTable,
    s: &SimilarityMatrix,
    cfg: &GreedyConfig,
) -> Result<SelectionResult> {
    let utility = scores.require_utility()?;
    let n = s.n();
    if utility.len() != n {
        return Err(Error::Dimension(format!(
            "{} utilities for a {n}x{n} similarity matrix",
            utility.len()
        )));
    }
    cfg.validate(n)?;
    let lambda = cfg.lambda;
    let mut dissim = vec![0.0; n];
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(cfg.budget);
    let mut gains = Vec::with_capacity(cfg.budget);

    while selected.len() < cfg.budget {
        let mut best: Option<(usize, f64)> = None;
        for x in (0..n).filter(|&x| !taken[x]) {
            let score = lambda * utility[x] + (1.0 - lambda) * dissim[x];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((x, score));
            }
        }
        let (x, score) = best.expect("budget <= n leaves a candidate");
        taken[x] = true;
        selected.push(x);
        gains.push(score);
        for (y, d) in dissim.iter_mut().enumerate() {
            *d += 1.0 - s.get(y, x);
        }
    }

    let objective = objective_value(scores, s, &selected, lambda)?;
    let params = [("lambda".to_string(), lambda.to_string())].into();
    Ok(SelectionResult {
        method: "utility-diversity".into(),
        budget: cfg.budget,
        selected,
        gains,
        objective,
        params,
    })
}
