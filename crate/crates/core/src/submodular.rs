//! Submodular set functions over a similarity kernel, each with an
//! incremental [`GainState`] so a greedy step costs O(n) instead of
//! re-evaluating the function from scratch.
//!
//! Coverage terms (`max_{j in X} s_ij`) treat the maximum over the empty set
//! as 0 and are floored at 0, so every variant has `f(∅) = 0`.
//!
//! | variant              | f(X)                                                        |
//! |----------------------|-------------------------------------------------------------|
//! | facility-location    | Σ_i max_{j∈X} s_ij                                          |
//! | mutual-information   | Σ_i max_{j∈X} s_ij + η Σ_{j∈X} max_{t∈T} s_tj               |
//! | conditional-gain     | Σ_i max(max_{j∈X} s_ij − ν max_{e∈E} s_ie, 0)               |
//! | graph-cut            | Σ_{i∈V, j∈X} s_ij − λ_cut Σ_{i,j∈X} s_ij                    |
//! | log-determinant      | log det(S_X + ridge·I)                                      |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{check_subset, SimilarityMatrix};

pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_NU: f64 = 1.0;
/// Largest penalty that keeps graph-cut monotone on kernels in `[0, 1]` with
/// unit diagonal.
pub const DEFAULT_CUT_PENALTY: f64 = 0.5;
pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    FacilityLocation,
    MutualInformation,
    ConditionalGain,
    GraphCut,
    LogDeterminant,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::FacilityLocation,
        Variant::MutualInformation,
        Variant::ConditionalGain,
        Variant::GraphCut,
        Variant::LogDeterminant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FacilityLocation => "facility-location",
            Variant::MutualInformation => "mutual-information",
            Variant::ConditionalGain => "conditional-gain",
            Variant::GraphCut => "graph-cut",
            Variant::LogDeterminant => "log-determinant",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facility-location" | "fl" => Ok(Variant::FacilityLocation),
            "mutual-information" | "mi" => Ok(Variant::MutualInformation),
            "conditional-gain" | "cg" => Ok(Variant::ConditionalGain),
            "graph-cut" | "gc" => Ok(Variant::GraphCut),
            "log-determinant" | "logdet" => Ok(Variant::LogDeterminant),
            other => Err(Error::domain(format!("unknown submodular variant {other:?}"))),
        }
    }
}

/// A fully parameterized set function over the ground set `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularSpec {
    pub variant: Variant,
    kernel: SimilarityMatrix,
    pub target_ids: Vec<usize>,
    pub existing_ids: Vec<usize>,
    pub eta: f64,
    pub nu: f64,
    pub cut_penalty: f64,
    pub ridge: f64,
}

impl SubmodularSpec {
    pub fn new(variant: Variant, kernel: SimilarityMatrix) -> Self {
        Self {
            variant,
            kernel,
            target_ids: Vec::new(),
            existing_ids: Vec::new(),
            eta: DEFAULT_ETA,
            nu: DEFAULT_NU,
            cut_penalty: DEFAULT_CUT_PENALTY,
            ridge: DEFAULT_RIDGE,
        }
    }

    pub fn with_targets(mut self, ids: Vec<usize>) -> Self {
        self.target_ids = ids;
        self
    }

    pub fn with_existing(mut self, ids: Vec<usize>) -> Self {
        self.existing_ids = ids;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_cut_penalty(mut self, cut_penalty: f64) -> Self {
        self.cut_penalty = cut_penalty;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn kernel(&self) -> &SimilarityMatrix {
        &self.kernel
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta", self.eta),
            ("nu", self.nu),
            ("cut_penalty", self.cut_penalty),
            ("ridge", self.ridge),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        let n = self.n();
        match self.variant {
            Variant::MutualInformation if self.target_ids.is_empty() => {
                return Err(Error::MissingField {
                    variant: "mutual-information",
                    field: "a non-empty target set",
                })
            }
            Variant::ConditionalGain if self.existing_ids.is_empty() => {
                return Err(Error::MissingField {
                    variant: "conditional-gain",
                    field: "a non-empty existing set",
                })
            }
            _ => {}
        }
        check_subset(&self.target_ids, n)?;
        check_subset(&self.existing_ids, n)?;
        Ok(())
    }

    /// Parameters that affect this variant, for provenance records.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        p.insert("variant".into(), self.variant.to_string());
        let ids = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self.variant {
            Variant::FacilityLocation => {}
            Variant::MutualInformation => {
                p.insert("eta".into(), self.eta.to_string());
                p.insert("targets".into(), ids(&self.target_ids));
            }
            Variant::ConditionalGain => {
                p.insert("nu".into(), self.nu.to_string());
                p.insert("existing".into(), ids(&self.existing_ids));
            }
            Variant::GraphCut => {
                p.insert("cut_penalty".into(), self.cut_penalty.to_string());
            }
            Variant::LogDeterminant => {
                p.insert("ridge".into(), self.ridge.to_string());
            }
        }
        p
    }

    fn coverage(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.kernel.get(i, j)).fold(0.0, f64::max)
    }

    /// `max_{t in T} s_tj`, the affinity of `j` to the target set.
    fn target_affinity(&self, j: usize) -> f64 {
        self.target_ids
            .iter()
            .map(|&t| self.kernel.get(t, j))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ν · max(0, max_{e in E} s_ie)`, the coverage already provided by `E`.
    fn existing_floor(&self, i: usize) -> f64 {
        self.nu * self.coverage(i, &self.existing_ids)
    }

    /// Evaluates `f(set)` directly from the definition.
    pub fn eval(&self, set: &[usize]) -> Result<f64> {
        self.validate()?;
        let n = self.n();
        check_subset(set, n)?;
        let s = &self.kernel;
        let value = match self.variant {
            Variant::FacilityLocation => (0..n).map(|i| self.coverage(i, set)).sum(),
            Variant::MutualInformation => {
                let cover: f64 = (0..n).map(|i| self.coverage(i, set)).sum();
                let align: f64 = set.iter().map(|&j| self.target_affinity(j)).sum();
                cover + self.eta * align
            }
            Variant::ConditionalGain => (0..n)
                .map(|i| (self.coverage(i, set) - self.existing_floor(i)).max(0.0))
                .sum(),
            Variant::GraphCut => {
                let cut: f64 = (0..n).flat_map(|i| set.iter().map(move |&j| s.get(i, j))).sum();
                let within: f64 = set
                    .iter()
                    .flat_map(|&i| set.iter().map(move |&j| s.get(i, j)))
                    .sum();
                cut - self.cut_penalty * within
            }
            Variant::LogDeterminant => {
                let k = set.len();
                let mut m = vec![0.0; k * k];
                for (a, &i) in set.iter().enumerate() {
                    for (b, &j) in set.iter().enumerate() {
                        m[a * k + b] = s.get(i, j);
                    }
                    m[a * k + a] += self.ridge;
                }
                cholesky_log_det(&mut m, k)?
            }
        };
        Ok(value)
    }

    pub fn init_state(&self) -> Result<GainState> {
        self.validate()?;
        let n = self.n();
        let s = &self.kernel;
        let cache = match self.variant {
            Variant::FacilityLocation | Variant::MutualInformation | Variant::ConditionalGain => {
                let floor: Vec<f64> = match self.variant {
                    Variant::ConditionalGain => (0..n).map(|i| self.existing_floor(i)).collect(),
                    _ => vec![0.0; n],
                };
                let bonus = match self.variant {
                    Variant::MutualInformation => {
                        (0..n).map(|j| self.eta * self.target_affinity(j)).collect()
                    }
                    _ => vec![0.0; n],
                };
                Cache::Coverage {
                    best: floor,
                    bonus,
                }
            }
            Variant::GraphCut => Cache::Cut {
                column: (0..n).map(|j| (0..n).map(|i| s.get(i, j)).sum()).collect(),
                affinity: vec![0.0; n],
            },
            Variant::LogDeterminant => Cache::LogDet {
                proj: vec![Vec::new(); n],
                resid: (0..n).map(|i| s.get(i, i) + self.ridge).collect(),
            },
        };
        Ok(GainState {
            in_set: vec![false; n],
            members: Vec::new(),
            value: 0.0,
            cache,
        })
    }

    fn check_candidate(&self, state: &GainState, v: usize) -> Result<()> {
        let n = self.n();
        if v >= n {
            return Err(Error::IdOutOfRange { id: v, n });
        }
        if state.in_set[v] {
            return Err(Error::AlreadySelected(v));
        }
        Ok(())
    }

    /// `f(X ∪ {v}) − f(X)` where `X` is the state's current set.
    pub fn marginal_gain(&self, state: &GainState, v: usize) -> Result<f64> {
        self.check_candidate(state, v)?;
        let s = &self.kernel;
        match &state.cache {
            Cache::Coverage { best, bonus } => {
                let cover: f64 = best
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| (s.get(i, v) - b).max(0.0))
                    .sum();
                Ok(cover + bonus[v])
            }
            Cache::Cut { column, affinity } => {
                Ok(column[v] - self.cut_penalty * (s.get(v, v) + affinity[v]))
            }
            Cache::LogDet { resid, .. } => {
                let r = resid[v];
                if r > 0.0 {
                    Ok(r.ln())
                } else {
                    Err(Error::NotPositiveDefinite {
                        size: state.members.len() + 1,
                        pivot: r,
                    })
                }
            }
        }
    }

    /// Adds `v` to the state's set and updates the cache.
    pub fn commit(&self, state: &mut GainState, v: usize) -> Result<()> {
        let gain = self.marginal_gain(state, v)?;
        let s = &self.kernel;
        let in_set = &state.in_set;
        match &mut state.cache {
            Cache::Coverage { best, .. } => {
                for (i, b) in best.iter_mut().enumerate() {
                    *b = b.max(s.get(i, v));
                }
            }
            Cache::Cut { affinity, .. } => {
                for (u, a) in affinity.iter_mut().enumerate() {
                    *a += s.get(u, v) + s.get(v, u);
                }
            }
            Cache::LogDet { proj, resid } => {
                // Extend the Cholesky factor of S_X + ridge·I by one row: every
                // outside candidate u gets one more coordinate of L⁻¹ s_{X,u}.
                let pivot = resid[v].sqrt();
                let pv = proj[v].clone();
                for u in (0..in_set.len()).filter(|&u| u != v && !in_set[u]) {
                    let dot: f64 = proj[u].iter().zip(&pv).map(|(a, b)| a * b).sum();
                    let e = (s.get(u, v) - dot) / pivot;
                    proj[u].push(e);
                    resid[u] -= e * e;
                }
                proj[v].push(pivot);
            }
        }
        state.in_set[v] = true;
        state.members.push(v);
        state.value += gain;
        Ok(())
    }

    /// Whether the greedy `(1 − 1/e)` guarantee applies: the function is
    /// submodular on this kernel and every worst-case gain `f(v | V∖{v})` is
    /// non-negative (for a submodular function, that is monotonicity).
    pub fn is_monotone_submodular(&self) -> Result<bool> {
        let nonneg = self.kernel.values().iter().all(|&v| v >= 0.0);
        let submodular = match self.variant {
            Variant::GraphCut => nonneg,
            Variant::MutualInformation => nonneg,
            _ => true,
        };
        if !submodular {
            return Ok(false);
        }
        if matches!(self.variant, Variant::FacilityLocation | Variant::ConditionalGain) {
            return Ok(true);
        }
        let n = self.n();
        for v in 0..n {
            let mut state = self.init_state()?;
            for u in (0..n).filter(|&u| u != v) {
                match self.commit(&mut state, u) {
                    Ok(()) => {}
                    Err(e) if e.is_numeric() => return Ok(false),
                    Err(e) => return Err(e),
                }
            }
            match self.marginal_gain(&state, v) {
                Ok(g) if g >= -1e-12 => {}
                Ok(_) => return Ok(false),
                Err(e) if e.is_numeric() => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone)]
enum Cache {
    /// Facility location and its MI/CG extensions: per-element best coverage
    /// (seeded with the existing-set floor for CG) and a per-candidate
    /// modular bonus (the MI target term).
    Coverage { best: Vec<f64>, bonus: Vec<f64> },
    /// Graph cut: column sums and `Σ_{j∈X} (s_uj + s_ju)` per candidate.
    Cut { column: Vec<f64>, affinity: Vec<f64> },
    /// Log-det: `L⁻¹ s_{X,u}` and Schur complement per candidate.
    LogDet { proj: Vec<Vec<f64>>, resid: Vec<f64> },
}

/// Incremental evaluation state for one [`SubmodularSpec`]; created by
/// [`SubmodularSpec::init_state`] and advanced by [`SubmodularSpec::commit`].
#[derive(Debug, Clone)]
pub struct GainState {
    in_set: Vec<bool>,
    members: Vec<usize>,
    value: f64,
    cache: Cache,
}

impl GainState {
    /// Selected ids in insertion order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, v: usize) -> bool {
        self.in_set.get(v).copied().unwrap_or(false)
    }

    /// Running `f(X)`, the sum of committed gains.
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// In-place Cholesky of a row-major `k x k` matrix, returning `log det`.
fn cholesky_log_det(m: &mut [f64], k: usize) -> Result<f64> {
    let mut log_det = 0.0;
    for j in 0..k {
        let mut d = m[j * k + j];
        for p in 0..j {
            d -= m[j * k + p] * m[j * k + p];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { size: j + 1, pivot: d });
        }
        let l = d.sqrt();
        m[j * k + j] = l;
        log_det += d.ln();
        for i in j + 1..k {
            let mut v = m[i * k + j];
            for p in 0..j {
                v -= m[i * k + p] * m[j * k + p];
            }
            m[i * k + j] = v / l;
        }
    }
    Ok(log_det)
}
