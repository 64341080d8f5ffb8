//! Utility scoring: perplexity, min-max normalization, the combined
//! perplexity/CoT utility, and pairwise in-context utility.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ScoreTable, TokenProbRecord};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Distance between the one-hot ground truth and the model's token
/// probabilities, used by [`pairwise_utility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// `|1 - p|_2 / sqrt(T)`
    #[default]
    LengthNormalizedEuclidean,
    /// `|1 - p|_2`
    Euclidean,
    /// KL form; the utility reduces to [`pmi_utility`].
    LogRatio,
}

impl DistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::LengthNormalizedEuclidean => "length-normalized-euclidean",
            DistanceMode::Euclidean => "euclidean",
            DistanceMode::LogRatio => "log-ratio",
        }
    }
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length-normalized-euclidean" => Ok(DistanceMode::LengthNormalizedEuclidean),
            "euclidean" => Ok(DistanceMode::Euclidean),
            "log-ratio" | "pmi" => Ok(DistanceMode::LogRatio),
            other => Err(Error::domain(format!("unknown distance mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams {
    alpha: f64,
    pub distance_mode: DistanceMode,
}

impl UtilityParams {
    pub fn new(alpha: f64, distance_mode: DistanceMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(Self {
            alpha,
            distance_mode,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            distance_mode: DistanceMode::default(),
        }
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::domain("empty token probability list"));
    }
    if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::domain(format!("probability {p} outside (0, 1]")));
    }
    Ok(())
}

/// `exp(-mean(ln p))`.
pub fn perplexity_from_probs(token_probs: &[f64]) -> Result<f64> {
    check_probs(token_probs)?;
    let nll = -token_probs.iter().map(|p| p.ln()).sum::<f64>() / token_probs.len() as f64;
    Ok(nll.exp().max(1.0))
}

/// Maps values onto `[0, 1]` by `(v - min) / (max - min)`. A degenerate range
/// maps everything to zero.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::domain("cannot normalize an empty list"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite value {v}")));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| ((v - lo) / range).clamp(0.0, 1.0)).collect())
}

/// Fills the utility column: `alpha * norm(ppl) + (1 - alpha) * norm(cot)`,
/// normalized over the whole table.
pub fn combined_utility(table: &ScoreTable, params: &UtilityParams) -> Result<ScoreTable> {
    if table.is_empty() {
        return table.with_utility(Vec::new());
    }
    let ppl = minmax_normalize(table.ppl())?;
    let cot = minmax_normalize(table.cot_loss())?;
    let a = params.alpha;
    let utility = ppl
        .iter()
        .zip(&cot)
        .map(|(p, c)| (a * p + (1.0 - a) * c).clamp(0.0, 1.0))
        .collect();
    table.with_utility(utility)
}

fn gt_distance(probs: &[f64], normalize: bool) -> f64 {
    let d = probs.iter().map(|p| (1.0 - p).powi(2)).sum::<f64>().sqrt();
    if normalize {
        d / (probs.len() as f64).sqrt()
    } else {
        d
    }
}

/// Information gain of the in-context pair for predicting `y_i`:
/// `d(GT, base) - d(GT, cond)`. Positive when the context helps.
pub fn pairwise_utility(rec: &TokenProbRecord, params: &UtilityParams) -> f64 {
    match params.distance_mode {
        DistanceMode::LengthNormalizedEuclidean => {
            gt_distance(rec.base_probs(), true) - gt_distance(rec.cond_probs(), true)
        }
        DistanceMode::Euclidean => {
            gt_distance(rec.base_probs(), false) - gt_distance(rec.cond_probs(), false)
        }
        DistanceMode::LogRatio => pmi_utility(rec),
    }
}

/// Conditional pointwise mutual information `sum_t ln(cond_t / base_t)`.
pub fn pmi_utility(rec: &TokenProbRecord) -> f64 {
    rec.cond_probs()
        .iter()
        .zip(rec.base_probs())
        .map(|(c, b)| c.ln() - b.ln())
        .sum()
}
