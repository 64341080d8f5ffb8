//! Shared data types. Every type validates its invariants on construction and
//! is immutable afterwards, so values can be shared freely between threads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Symmetry tolerance for similarity matrices supplied from outside.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// One dataset item. `id` is the dense index assigned by file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExampleRecord {
    pub id: usize,
    pub external_key: Option<String>,
    pub text: Option<String>,
    pub subdomain: Option<String>,
}

/// Row-major `n x d` embedding matrix with finite entries and no zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::Dimension(format!(
                "expected {n}x{d} = {} values, got {}",
                n * d,
                values.len()
            )));
        }
        if d == 0 && n > 0 {
            return Err(Error::Dimension("embedding dimension must be positive".into()));
        }
        for (i, row) in values.chunks(d.max(1)).enumerate() {
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::domain(format!("row {i}: non-finite value {v}")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::domain(format!("row {i}: zero embedding")));
            }
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Dimension(format!(
                "row {i} has length {}, expected {d}",
                r.len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-example raw perplexity, raw CoT loss and, once computed, the combined
/// utility in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    ppl: Vec<f64>,
    cot_loss: Vec<f64>,
    utility: Option<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(ppl: Vec<f64>, cot_loss: Vec<f64>, utility: Option<Vec<f64>>) -> Result<Self> {
        if ppl.len() != cot_loss.len() {
            return Err(Error::Dimension(format!(
                "{} perplexities but {} CoT losses",
                ppl.len(),
                cot_loss.len()
            )));
        }
        for (id, &p) in ppl.iter().enumerate() {
            if !(p.is_finite() && p >= 1.0) {
                return Err(Error::domain(format!("id {id}: perplexity {p} must be >= 1")));
            }
        }
        for (id, &c) in cot_loss.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::domain(format!("id {id}: CoT loss {c} must be >= 0")));
            }
        }
        if let Some(u) = &utility {
            if u.len() != ppl.len() {
                return Err(Error::Dimension(format!(
                    "{} utilities for {} examples",
                    u.len(),
                    ppl.len()
                )));
            }
            for (id, &v) in u.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("id {id}: utility {v} outside [0, 1]")));
                }
            }
        }
        Ok(Self {
            ppl,
            cot_loss,
            utility,
        })
    }

    pub fn len(&self) -> usize {
        self.ppl.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ppl.is_empty()
    }

    pub fn ppl(&self) -> &[f64] {
        &self.ppl
    }

    pub fn cot_loss(&self) -> &[f64] {
        &self.cot_loss
    }

    pub fn utility(&self) -> Option<&[f64]> {
        self.utility.as_deref()
    }

    /// Utilities, or an error naming the missing column.
    pub fn require_utility(&self) -> Result<&[f64]> {
        self.utility
            .as_deref()
            .ok_or_else(|| Error::domain("score table has no utility column; run `utility` first"))
    }

    pub fn with_utility(&self, utility: Vec<f64>) -> Result<Self> {
        Self::new(self.ppl.clone(), self.cot_loss.clone(), Some(utility))
    }
}

/// Dense symmetric `n x n` similarity matrix with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {n}x{n} = {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("S[{i}][{j}] = {v} outside [-1, 1]")));
                }
                if j > i && (v - values[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::domain(format!(
                        "S[{i}][{j}] = {v} but S[{j}][{i}] = {}",
                        values[j * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} has length {}, expected {n}",
                r.len()
            )));
        }
        Self::new(n, rows.concat())
    }

    /// Builds from a closure over the upper triangle, mirroring it so the
    /// result is exactly symmetric.
    pub(crate) fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Output of every selection method.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: String,
    pub budget: usize,
    pub selected: Vec<usize>,
    pub gains: Vec<f64>,
    pub objective: f64,
    pub params: BTreeMap<String, String>,
}

impl SelectionResult {
    pub fn validate(&self) -> Result<()> {
        if self.method.is_empty() || self.method.chars().any(char::is_whitespace) {
            return Err(Error::domain(format!(
                "method tag {:?} must be a non-empty token",
                self.method
            )));
        }
        if self.selected.len() > self.budget {
            return Err(Error::domain(format!(
                "{} ids selected under budget {}",
                self.selected.len(),
                self.budget
            )));
        }
        if self.gains.len() != self.selected.len() {
            return Err(Error::Dimension(format!(
                "{} gains for {} selected ids",
                self.gains.len(),
                self.selected.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.selected.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::domain(format!("id {dup} selected twice")));
        }
        for (k, v) in &self.params {
            if k.is_empty() || k.contains('=') || k.chars().any(char::is_whitespace) {
                return Err(Error::domain(format!("bad parameter key {k:?}")));
            }
            if v.is_empty() || v.chars().any(char::is_whitespace) {
                return Err(Error::domain(format!("bad value {v:?} for parameter {k}")));
            }
        }
        Ok(())
    }
}

/// Ground-truth token probabilities of `y_i` without (`base`) and with
/// (`cond`) the in-context example `(x_j, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenProbRecord {
    pub i: usize,
    pub j: usize,
    base: Vec<f64>,
    cond: Vec<f64>,
}

impl TokenProbRecord {
    pub fn new(i: usize, j: usize, base: Vec<f64>, cond: Vec<f64>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::domain(format!("pair ({i}, {j}): empty token list")));
        }
        if base.len() != cond.len() {
            return Err(Error::Dimension(format!(
                "pair ({i}, {j}): {} base probabilities but {} conditional",
                base.len(),
                cond.len()
            )));
        }
        if let Some(p) = base.iter().chain(&cond).find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::domain(format!(
                "pair ({i}, {j}): probability {p} outside (0, 1]"
            )));
        }
        Ok(Self { i, j, base, cond })
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn base_probs(&self) -> &[f64] {
        &self.base
    }

    pub fn cond_probs(&self) -> &[f64] {
        &self.cond
    }
}

/// Validates that `ids` are distinct members of `0..n`.
pub(crate) fn check_subset(ids: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &id in ids {
        if id >= n {
            return Err(Error::IdOutOfRange { id, n });
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::domain(format!("id {id} appears twice in the set")));
        }
    }
    Ok(())
}
