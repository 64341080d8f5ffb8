//! Subset quality measures and the method-comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_file;
use crate::model::{check_subset, ExampleRecord, ScoreTable, SimilarityMatrix};

/// Dispersion `Σ_{i∈A} Σ_{j∈A, j≠i} (1 − S_ij)` over ordered pairs, so each
/// unordered pair contributes twice.
pub fn diversity_score(s: &SimilarityMatrix, subset: &[usize]) -> Result<f64> {
    check_subset(subset, s.n())?;
    let mut total = 0.0;
    for &i in subset {
        for &j in subset {
            if i != j {
                total += 1.0 - s.get(i, j);
            }
        }
    }
    Ok(total)
}

/// `λ·Σ_{x∈A} U(x) + (1 − λ)·D(A)`.
pub fn objective_value(
    scores: &ScoreTable,
    s: &SimilarityMatrix,
    subset: &[usize],
    lambda: f64,
) -> Result<f64> {
    let utility = scores.require_utility()?;
    if utility.len() != s.n() {
        return Err(Error::Dimension(format!(
            "{} utilities for a {n}x{n} similarity matrix",
            utility.len(),
            n = s.n()
        )));
    }
    let u: f64 = subset.iter().map(|&x| utility[x]).sum();
    Ok(lambda * u + (1.0 - lambda) * diversity_score(s, subset)?)
}

pub const UNTAGGED: &str = "untagged";

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub tag: String,
    pub in_subset: usize,
    pub in_ground: usize,
    pub fraction: f64,
}

/// Per-subdomain counts, sorted by tag.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageSummary {
    pub rows: Vec<CoverageRow>,
}

impl CoverageSummary {
    pub fn get(&self, tag: &str) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.tag == tag)
    }
}

pub fn coverage_summary(dataset: &[ExampleRecord], subset: &[usize]) -> Result<CoverageSummary> {
    check_subset(subset, dataset.len())?;
    let tag = |r: &ExampleRecord| r.subdomain.clone().unwrap_or_else(|| UNTAGGED.to_string());
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in dataset {
        counts.entry(tag(r)).or_default().1 += 1;
    }
    for &id in subset {
        counts.get_mut(&tag(&dataset[id])).expect("tag counted above").0 += 1;
    }
    let rows = counts
        .into_iter()
        .map(|(tag, (in_subset, in_ground))| CoverageRow {
            tag,
            in_subset,
            in_ground,
            fraction: in_subset as f64 / in_ground as f64,
        })
        .collect();
    Ok(CoverageSummary { rows })
}

/// One externally measured metric for a method at a budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub method: String,
    pub budget: usize,
    pub metric_name: String,
    pub metric_value: f64,
}

/// Parses a `RESULTS` file: optional `RESULTS` header, then
/// `method budget metric value` per line.
pub fn parse_results(text: &str) -> Result<Vec<ComparisonRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') || (out.is_empty() && l == "RESULTS") {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse(line, "expected `method budget metric value`"));
        }
        let budget: usize = toks[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad budget {:?}", toks[1])))?;
        if budget == 0 {
            return Err(Error::parse(line, "budget must be positive"));
        }
        let value: f64 = toks[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(line, format!("bad metric value {:?}", toks[3])))?;
        out.push(ComparisonRecord {
            method: toks[0].to_string(),
            budget,
            metric_name: toks[2].to_string(),
            metric_value: value,
        });
    }
    Ok(out)
}

pub fn load_results(path: &Path) -> Result<Vec<ComparisonRecord>> {
    parse_results(&read_file(path)?)
}

/// Column heading for a method tag.
pub fn method_label(tag: &str) -> &str {
    match tag {
        "random" => "Random Selection",
        "dpp" => "DPP (Greedy)",
        "ours" | "utility-diversity" => "Our Method",
        "submodular" => "Submodular (Greedy)",
        "full" => "Full Fine-tuning",
        other => other,
    }
}

/// Renders one table per metric: rows are budgets ascending, columns are
/// methods in first-appearance order, cells at two decimals.
pub fn format_comparison(records: &[ComparisonRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::domain("no comparison records"));
    }
    let mut metrics: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, usize, &str), f64> = BTreeMap::new();
    for r in records {
        if !metrics.contains(&r.metric_name.as_str()) {
            metrics.push(&r.metric_name);
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        let key = (r.metric_name.as_str(), r.budget, r.method.as_str());
        if let Some(prev) = cells.insert(key, r.metric_value) {
            if prev != r.metric_value {
                return Err(Error::domain(format!(
                    "conflicting values {prev} and {} for method {} at budget {} ({})",
                    r.metric_value, r.method, r.budget, r.metric_name
                )));
            }
        }
    }

    let mut out = String::new();
    for (mi, metric) in metrics.iter().enumerate() {
        let cols: Vec<&str> = methods
            .iter()
            .copied()
            .filter(|m| cells.keys().any(|(mt, _, mm)| mt == metric && mm == m))
            .collect();
        let mut budgets: Vec<usize> = cells
            .keys()
            .filter(|(mt, _, _)| mt == metric)
            .map(|&(_, b, _)| b)
            .collect();
        budgets.dedup();

        let mut header = vec!["Subset Size".to_string()];
        header.extend(cols.iter().map(|m| method_label(m).to_string()));
        let mut rows = vec![header];
        for &b in &budgets {
            let mut row = vec![b.to_string()];
            row.extend(cols.iter().map(|m| {
                cells
                    .get(&(*metric, b, *m))
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
            }));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();

        if mi > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{metric}");
        for (ri, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!(" {cell:<w$} "))
                .collect();
            let _ = writeln!(out, "|{}|", line.join("|"));
            if ri == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(w + 2)).collect();
                let _ = writeln!(out, "|{}|", rule.join("|"));
            }
        }
    }
    Ok(out)
}
