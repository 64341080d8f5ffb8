//! Line-oriented interchange formats.
//!
//! Every file starts with a one-line typed header; lines whose first
//! non-blank character is `#` are comments and ignored everywhere. Floats are
//! written with 17 significant digits so `parse(format(x)) == x` bit for bit.
//!
//! ```text
//! EMB n d              then n lines of d reals
//! SCORES n             then n lines `id ppl cot_loss [utility]`
//! PAIRPROBS count      then per record: `i j T`, T base probs, T cond probs
//! SELECTION method B objective
//! key=value ...        (params line, may be empty)
//! id gain              (one per selected id, in selection order)
//! SIM n                then the upper triangle, row i holding S[i][i..n]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{EmbeddingMatrix, ScoreTable, SelectionResult, SimilarityMatrix, TokenProbRecord};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment lines with their 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
                .filter(|(_, l)| !l.trim_start().starts_with('#')),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    /// Next line, blank or not.
    fn next_raw(&mut self) -> Option<(usize, &'a str)> {
        let item = self.inner.next();
        if let Some((n, _)) = item {
            self.last = n;
        }
        item
    }

    /// Next non-blank line, or an error naming what was expected.
    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        while let Some((n, l)) = self.next_raw() {
            if !l.trim().is_empty() {
                return Ok((n, l));
            }
        }
        Err(Error::parse(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn expect_end(&mut self) -> Result<()> {
        while let Some((n, l)) = self.next_raw() {
            if !l.trim().is_empty() {
                return Err(Error::parse(n, "unexpected trailing content"));
            }
        }
        Ok(())
    }
}

fn parse_tok<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} from {tok:?}")))
}

fn parse_real(line: usize, tok: &str, what: &str) -> Result<f64> {
    let v: f64 = parse_tok(line, tok, what)?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what} {tok:?}")));
    }
    Ok(v)
}

fn header<'a>(lines: &mut Lines<'a>, tag: &str, arity: usize) -> Result<(usize, Vec<&'a str>)> {
    let (n, l) = lines.expect(&format!("{tag} header"))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.first() != Some(&tag) || toks.len() != arity + 1 {
        return Err(Error::parse(
            n,
            format!("malformed header {l:?}, expected `{tag}` followed by {arity} fields"),
        ));
    }
    Ok((n, toks[1..].to_vec()))
}

// --- embeddings -------------------------------------------------------------

pub fn parse_embeddings(text: &str) -> Result<EmbeddingMatrix> {
    let mut lines = Lines::new(text);
    let (hl, h) = header(&mut lines, "EMB", 2)?;
    let n: usize = parse_tok(hl, h[0], "n")?;
    let d: usize = parse_tok(hl, h[1], "d")?;
    if d == 0 && n > 0 {
        return Err(Error::parse(hl, "embedding dimension must be positive"));
    }
    let mut values = Vec::with_capacity(n * d);
    for row in 0..n {
        let (ln, l) = lines.expect(&format!("embedding row {row}"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != d {
            return Err(Error::parse(
                ln,
                format!("dimension mismatch: row {row} has {} values, expected {d}", toks.len()),
            ));
        }
        let start = values.len();
        for t in toks {
            values.push(parse_real(ln, t, "embedding value")?);
        }
        if values[start..].iter().all(|&v| v == 0.0) {
            return Err(Error::parse(ln, format!("row {row} is all zeros")));
        }
    }
    lines.expect_end()?;
    EmbeddingMatrix::new(n, d, values)
}

pub fn format_embeddings(e: &EmbeddingMatrix) -> String {
    let mut out = format!("EMB {} {}\n", e.n(), e.d());
    for i in 0..e.n() {
        let row: Vec<String> = e.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    parse_embeddings(&read_file(path)?)
}

pub fn write_embeddings(e: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_file(path, &format_embeddings(e))
}

// --- scores -----------------------------------------------------------------

pub fn parse_scores(text: &str) -> Result<ScoreTable> {
    let mut lines = Lines::new(text);
    let (hl, h) = header(&mut lines, "SCORES", 1)?;
    let n: usize = parse_tok(hl, h[0], "n")?;
    let mut ppl = vec![f64::NAN; n];
    let mut cot = vec![f64::NAN; n];
    let mut util: Option<Vec<f64>> = None;
    let mut seen = vec![false; n];
    for row in 0..n {
        let (ln, l) = lines.expect(&format!("score row {row}"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if !(3..=4).contains(&toks.len()) {
            return Err(Error::parse(ln, "expected `id ppl cot_loss [utility]`"));
        }
        let id: usize = parse_tok(ln, toks[0], "id")?;
        if id >= n {
            return Err(Error::parse(ln, format!("id {id} out of range 0..{n}")));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::parse(ln, format!("duplicate id {id}")));
        }
        let p = parse_real(ln, toks[1], "perplexity")?;
        if p < 1.0 {
            return Err(Error::parse(ln, format!("id {id}: perplexity {p} < 1")));
        }
        let c = parse_real(ln, toks[2], "CoT loss")?;
        if c < 0.0 {
            return Err(Error::parse(ln, format!("id {id}: negative CoT loss {c}")));
        }
        ppl[id] = p;
        cot[id] = c;
        match (row, toks.get(3), util.as_mut()) {
            (0, Some(t), _) => {
                let mut u = vec![f64::NAN; n];
                u[id] = parse_utility(ln, id, t)?;
                util = Some(u);
            }
            (_, Some(t), Some(u)) => u[id] = parse_utility(ln, id, t)?,
            (_, None, None) => {}
            _ => {
                return Err(Error::parse(
                    ln,
                    "utility column must be present on all rows or on none",
                ))
            }
        }
    }
    lines.expect_end()?;
    if let Some(id) = seen.iter().position(|s| !s) {
        return Err(Error::parse(hl, format!("missing row for id {id}")));
    }
    ScoreTable::new(ppl, cot, util)
}

fn parse_utility(ln: usize, id: usize, tok: &str) -> Result<f64> {
    let u = parse_real(ln, tok, "utility")?;
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::parse(ln, format!("id {id}: utility {u} outside [0, 1]")));
    }
    Ok(u)
}

pub fn format_scores(t: &ScoreTable) -> String {
    let mut out = format!("SCORES {}\n", t.len());
    for id in 0..t.len() {
        let _ = write!(out, "{id} {} {}", fmt_f64(t.ppl()[id]), fmt_f64(t.cot_loss()[id]));
        if let Some(u) = t.utility() {
            let _ = write!(out, " {}", fmt_f64(u[id]));
        }
        out.push('\n');
    }
    out
}

pub fn load_scores(path: &Path) -> Result<ScoreTable> {
    parse_scores(&read_file(path)?)
}

pub fn write_scores(t: &ScoreTable, path: &Path) -> Result<()> {
    write_file(path, &format_scores(t))
}

// --- token-probability records ---------------------------------------------

pub fn parse_pair_probs(text: &str) -> Result<Vec<TokenProbRecord>> {
    let mut lines = Lines::new(text);
    let (hl, h) = header(&mut lines, "PAIRPROBS", 1)?;
    let count: usize = parse_tok(hl, h[0], "count")?;
    let mut out = Vec::with_capacity(count);
    for r in 0..count {
        let (ln, l) = lines.expect(&format!("record {r} header `i j T`"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(ln, "expected `i j T`"));
        }
        let i: usize = parse_tok(ln, toks[0], "i")?;
        let j: usize = parse_tok(ln, toks[1], "j")?;
        let t: usize = parse_tok(ln, toks[2], "T")?;
        if t == 0 {
            return Err(Error::parse(ln, format!("pair ({i}, {j}): T must be >= 1")));
        }
        let base = prob_line(&mut lines, t, i, j, "base")?;
        let cond = prob_line(&mut lines, t, i, j, "conditional")?;
        out.push(TokenProbRecord::new(i, j, base, cond).map_err(|e| Error::parse(ln, e.to_string()))?);
    }
    lines.expect_end()?;
    Ok(out)
}

fn prob_line(lines: &mut Lines<'_>, t: usize, i: usize, j: usize, what: &str) -> Result<Vec<f64>> {
    let (ln, l) = lines.expect(&format!("{what} probabilities for pair ({i}, {j})"))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != t {
        return Err(Error::parse(
            ln,
            format!("pair ({i}, {j}): {} {what} probabilities, expected {t}", toks.len()),
        ));
    }
    toks.iter()
        .map(|tok| {
            let p = parse_real(ln, tok, "probability")?;
            if p <= 0.0 || p > 1.0 {
                return Err(Error::parse(ln, format!("pair ({i}, {j}): probability {p} outside (0, 1]")));
            }
            Ok(p)
        })
        .collect()
}

pub fn format_pair_probs(records: &[TokenProbRecord]) -> String {
    let mut out = format!("PAIRPROBS {}\n", records.len());
    for r in records {
        let _ = writeln!(out, "{} {} {}", r.i, r.j, r.len());
        for probs in [r.base_probs(), r.cond_probs()] {
            let toks: Vec<String> = probs.iter().map(|&p| fmt_f64(p)).collect();
            out.push_str(&toks.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn load_pair_probs(path: &Path) -> Result<Vec<TokenProbRecord>> {
    parse_pair_probs(&read_file(path)?)
}

pub fn write_pair_probs(records: &[TokenProbRecord], path: &Path) -> Result<()> {
    write_file(path, &format_pair_probs(records))
}

// --- selections -------------------------------------------------------------

pub fn format_selection(r: &SelectionResult) -> Result<String> {
    r.validate()?;
    let mut out = format!("SELECTION {} {} {}\n", r.method, r.budget, fmt_f64(r.objective));
    let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    out.push_str(&params.join(" "));
    out.push('\n');
    for (id, g) in r.selected.iter().zip(&r.gains) {
        let _ = writeln!(out, "{id} {}", fmt_f64(*g));
    }
    Ok(out)
}

pub fn parse_selection(text: &str) -> Result<SelectionResult> {
    let mut lines = Lines::new(text);
    let (hl, h) = header(&mut lines, "SELECTION", 3)?;
    let method = h[0].to_string();
    let budget: usize = parse_tok(hl, h[1], "budget")?;
    let objective = parse_real(hl, h[2], "objective")?;
    let (pl, pline) = lines
        .next_raw()
        .ok_or_else(|| Error::parse(hl + 1, "missing params line"))?;
    let mut params = BTreeMap::new();
    for kv in pline.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse(pl, format!("param {kv:?} is not key=value")))?;
        if params.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::parse(pl, format!("duplicate param {k}")));
        }
    }
    let mut selected = Vec::new();
    let mut gains = Vec::new();
    while let Some((ln, l)) = lines.next_raw() {
        if l.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(ln, "expected `id gain`"));
        }
        let id: usize = parse_tok(ln, toks[0], "id")?;
        if selected.contains(&id) {
            return Err(Error::parse(ln, format!("duplicate id {id}")));
        }
        selected.push(id);
        gains.push(parse_real(ln, toks[1], "gain")?);
    }
    let r = SelectionResult {
        method,
        budget,
        selected,
        gains,
        objective,
        params,
    };
    r.validate().map_err(|e| Error::parse(hl, e.to_string()))?;
    Ok(r)
}

pub fn write_selection(r: &SelectionResult, path: &Path) -> Result<()> {
    write_file(path, &format_selection(r)?)
}

pub fn load_selection(path: &Path) -> Result<SelectionResult> {
    parse_selection(&read_file(path)?)
}

// --- similarity cache -------------------------------------------------------

pub fn format_similarity(s: &SimilarityMatrix) -> String {
    let n = s.n();
    let mut out = format!("SIM {n}\n");
    for i in 0..n {
        let row: Vec<String> = s.row(i)[i..].iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_similarity(text: &str) -> Result<SimilarityMatrix> {
    let mut lines = Lines::new(text);
    let (hl, h) = header(&mut lines, "SIM", 1)?;
    let n: usize = parse_tok(hl, h[0], "n")?;
    let mut upper: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, l) = lines.expect(&format!("similarity row {i}"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != n - i {
            return Err(Error::parse(
                ln,
                format!("dimension mismatch: row {i} has {} values, expected {}", toks.len(), n - i),
            ));
        }
        let row = toks
            .iter()
            .map(|t| {
                let v = parse_real(ln, t, "similarity")?;
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::parse(ln, format!("similarity {v} outside [-1, 1]")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        upper.push(row);
    }
    lines.expect_end()?;
    Ok(SimilarityMatrix::from_upper(n, |i, j| upper[i][j - i]))
}

pub fn load_similarity(path: &Path) -> Result<SimilarityMatrix> {
    parse_similarity(&read_file(path)?)
}

pub fn write_similarity(s: &SimilarityMatrix, path: &Path) -> Result<()> {
    write_file(path, &format_similarity(s))
}
