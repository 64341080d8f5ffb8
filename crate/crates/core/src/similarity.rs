//! Cosine similarity kernels.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, SimilarityMatrix};

/// Entrywise map applied to a similarity matrix before it is used as a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelTransform {
    Raw,
    /// `s -> max(s, 0)`
    #[default]
    Clip,
    /// `s -> (s + 1) / 2`
    Shift,
}

impl KernelTransform {
    pub fn apply_one(self, s: f64) -> f64 {
        match self {
            KernelTransform::Raw => s,
            KernelTransform::Clip => s.max(0.0),
            KernelTransform::Shift => (s + 1.0) / 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelTransform::Raw => "raw",
            KernelTransform::Clip => "clip",
            KernelTransform::Shift => "shift",
        }
    }
}

impl fmt::Display for KernelTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(KernelTransform::Raw),
            "clip" | "clip-at-zero" => Ok(KernelTransform::Clip),
            "shift" | "shift-to-unit" => Ok(KernelTransform::Shift),
            other => Err(Error::domain(format!(
                "unknown transform {other:?} (expected raw, clip or shift)"
            ))),
        }
    }
}

/// `S[i][j] = <e_i, e_j> / (|e_i| |e_j|)`, computed on the upper triangle and
/// mirrored, clamped to `[-1, 1]` against rounding.
pub fn cosine_similarity_matrix(e: &EmbeddingMatrix) -> Result<SimilarityMatrix> {
    let norms: Vec<f64> = (0..e.n())
        .map(|i| e.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&nrm| !(nrm > 0.0 && nrm.is_finite())) {
        return Err(Error::domain(format!("embedding row {i} has norm {}", norms[i])));
    }
    Ok(SimilarityMatrix::from_upper(e.n(), |i, j| {
        let dot: f64 = e.row(i).iter().zip(e.row(j)).map(|(a, b)| a * b).sum();
        (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
    }))
}

pub fn apply_transform(s: &SimilarityMatrix, t: KernelTransform) -> SimilarityMatrix {
    match t {
        KernelTransform::Raw => s.clone(),
        _ => s.map(|v| t.apply_one(v)),
    }
}
