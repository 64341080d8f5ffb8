//! `subsel` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numeric failure (for
//! example a kernel that is not positive definite, or a violated asserted
//! approximation bound in `certify`).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use subsel::baselines::{dpp_greedy_with, random_select, RandomConfig};
use subsel::evaluation::{format_comparison, load_results};
use subsel::greedy::{self, greedy_maximize, utility_diversity_select, GreedyConfig, GreedyMode};
use subsel::io;
use subsel::manifest::{load_config, RunManifest};
use subsel::model::ScoreTable;
use subsel::oracle::{self, certify, certify_balanced, OracleReport};
use subsel::scoring::{self, combined_utility, pairwise_utility, DistanceMode, UtilityParams};
use subsel::similarity::{apply_transform, cosine_similarity_matrix, KernelTransform};
use subsel::submodular::{self, SubmodularSpec, Variant};
use subsel::SimilarityMatrix;

#[derive(Debug, Parser)]
#[command(name = "subsel", version, about = "Budgeted training-data subset selection")]
struct Cli {
    /// `key=value` config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cosine similarity cache (SIM) from an embedding file (EMB).
    Similarity(SimilarityArgs),
    /// Fill the utility column of a SCORES file.
    Utility(UtilityArgs),
    /// Pairwise in-context utility for every record of a PAIRPROBS file.
    PairwiseUtility(PairwiseArgs),
    /// Select a budgeted subset.
    Select(SelectArgs),
    /// Compare greedy against brute force on random small instances.
    Certify(CertifyArgs),
    /// Render a RESULTS file as a comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimilarityArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// raw, clip or shift
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct UtilityArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Weight of normalized perplexity against normalized CoT loss.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PairwiseArgs {
    #[arg(long)]
    pairs: PathBuf,
    /// length-normalized-euclidean, euclidean or log-ratio
    #[arg(long)]
    distance: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// random, dpp, submodular or utility-diversity
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Ground-set size for `random` when no input file is given.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long = "cut-penalty", allow_hyphen_values = true)]
    cut_penalty: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ridge: Option<String>,
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated target ids (mutual-information).
    #[arg(long)]
    targets: Option<String>,
    /// Comma-separated existing ids (conditional-gain).
    #[arg(long)]
    existing: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    /// Comma-separated variants, `all`, or `utility-diversity`.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Embedding dimension of the random instances.
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    transform: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long = "cut-penalty", allow_hyphen_values = true)]
    cut_penalty: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ridge: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolves settings with precedence flag > config file > default and
/// records every resolved value for the manifest.
struct Settings {
    file: BTreeMap<String, String>,
    manifest: RunManifest,
}

impl Settings {
    fn new(config: Option<&Path>) -> Result<Self> {
        let command_line = std::env::args().collect::<Vec<_>>().join(" ");
        let mut manifest = RunManifest::new(command_line);
        let file = match config {
            Some(p) => {
                manifest.add_input(p)?;
                load_config(p).with_context(|| format!("config {}", p.display()))?
            }
            None => BTreeMap::new(),
        };
        Ok(Self { file, manifest })
    }

    fn raw(&mut self, key: &str, flag: Option<&str>) -> Option<String> {
        let v = flag.map(str::to_string).or_else(|| self.file.get(key).cloned());
        if let Some(v) = &v {
            self.manifest.config.insert(key.to_string(), v.clone());
        }
        v
    }

    fn opt<T>(&mut self, key: &str, flag: Option<&str>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key, flag)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("--{key} {v:?}: {e}")))
            .transpose()
    }

    fn get<T>(&mut self, key: &str, flag: Option<&str>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.manifest.config.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    fn require<T>(&mut self, key: &str, flag: Option<&str>) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| anyhow!("missing required --{key}"))
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        Ok(self.manifest.add_input(path)?)
    }

    fn finish(&self, primary: &Path) -> Result<()> {
        self.manifest.write_next_to(primary)?;
        Ok(())
    }
}

fn unit_interval(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        bail!("--{name} {v} must lie in [0, 1]");
    }
    Ok(v)
}

fn id_list(raw: Option<String>) -> Result<Vec<usize>> {
    raw.map_or(Ok(Vec::new()), |s| {
        s.split(',')
            .filter(|t| !t.is_empty())
            .map(|t| t.trim().parse().map_err(|_| anyhow!("bad id {t:?}")))
            .collect()
    })
}

fn cmd_similarity(a: SimilarityArgs, mut st: Settings) -> Result<()> {
    let transform: KernelTransform = st.get("transform", a.transform.as_deref(), KernelTransform::Raw)?;
    let e = io::load_embeddings(&a.embeddings)
        .with_context(|| format!("embeddings {}", a.embeddings.display()))?;
    st.input(&a.embeddings)?;
    let s = apply_transform(&cosine_similarity_matrix(&e)?, transform);
    io::write_similarity(&s, &a.out)?;
    st.finish(&a.out)?;
    eprintln!("wrote {}x{} similarity matrix to {}", s.n(), s.n(), a.out.display());
    Ok(())
}

fn cmd_utility(a: UtilityArgs, mut st: Settings) -> Result<()> {
    let alpha = unit_interval("alpha", st.get("alpha", a.alpha.as_deref(), scoring::DEFAULT_ALPHA)?)?;
    let params = UtilityParams::new(alpha, DistanceMode::default())?;
    let table = io::load_scores(&a.scores).with_context(|| format!("scores {}", a.scores.display()))?;
    st.input(&a.scores)?;
    let filled = combined_utility(&table, &params)?;
    io::write_scores(&filled, &a.out)?;
    st.finish(&a.out)?;
    eprintln!("wrote utilities for {} examples to {}", filled.len(), a.out.display());
    Ok(())
}

fn cmd_pairwise(a: PairwiseArgs, mut st: Settings) -> Result<()> {
    let mode: DistanceMode = st.get("distance", a.distance.as_deref(), DistanceMode::default())?;
    let params = UtilityParams::new(scoring::DEFAULT_ALPHA, mode)?;
    let records =
        io::load_pair_probs(&a.pairs).with_context(|| format!("pairs {}", a.pairs.display()))?;
    st.input(&a.pairs)?;
    let mut out = format!("PAIRUTIL {} {}\n", records.len(), mode);
    for r in &records {
        out.push_str(&format!("{} {} {}\n", r.i, r.j, io::fmt_f64(pairwise_utility(r, &params))));
    }
    std::fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    st.finish(&a.out)?;
    Ok(())
}

fn load_kernel(a: &SelectArgs, st: &mut Settings) -> Result<Option<SimilarityMatrix>> {
    match (&a.similarity, &a.embeddings) {
        (Some(_), Some(_)) => bail!("give only one of --similarity and --embeddings"),
        (Some(p), None) => {
            let s = io::load_similarity(p).with_context(|| format!("similarity {}", p.display()))?;
            st.input(p)?;
            Ok(Some(s))
        }
        (None, Some(p)) => {
            let e = io::load_embeddings(p).with_context(|| format!("embeddings {}", p.display()))?;
            st.input(p)?;
            Ok(Some(cosine_similarity_matrix(&e)?))
        }
        (None, None) => Ok(None),
    }
}

fn load_scores_arg(path: Option<&PathBuf>, st: &mut Settings) -> Result<Option<ScoreTable>> {
    path.map(|p| {
        let t = io::load_scores(p).with_context(|| format!("scores {}", p.display()))?;
        st.input(p)?;
        Ok(t)
    })
    .transpose()
}

fn cmd_select(a: SelectArgs, mut st: Settings) -> Result<()> {
    let method: String = st.require("method", a.method.as_deref())?;
    let budget: usize = st.require("budget", a.budget.as_deref())?;
    let kernel = load_kernel(&a, &mut st)?;
    let scores = load_scores_arg(a.scores.as_ref(), &mut st)?;
    let need_kernel = |k: Option<SimilarityMatrix>| {
        k.ok_or_else(|| anyhow!("method {method} needs --similarity or --embeddings"))
    };

    let result = match method.as_str() {
        "random" => {
            let n = match st.opt::<usize>("n", a.n.as_deref())? {
                Some(n) => n,
                None => kernel
                    .as_ref()
                    .map(SimilarityMatrix::n)
                    .or(scores.as_ref().map(ScoreTable::len))
                    .ok_or_else(|| anyhow!("method random needs --n or an input file"))?,
            };
            let seed: u64 = st.get("seed", a.seed.as_deref(), 0)?;
            random_select(n, &RandomConfig { seed, budget })?
        }
        "dpp" => {
            let transform = st.get("transform", a.transform.as_deref(), KernelTransform::Raw)?;
            let ridge: f64 = st.get("ridge", a.ridge.as_deref(), submodular::DEFAULT_RIDGE)?;
            let mode: GreedyMode = st.get("mode", a.mode.as_deref(), GreedyMode::Lazy)?;
            let s = apply_transform(&need_kernel(kernel)?, transform);
            let mut r = dpp_greedy_with(&s, &GreedyConfig::new(budget).with_mode(mode), ridge)?;
            r.params.insert("transform".into(), transform.to_string());
            r
        }
        "submodular" => {
            let variant: Variant = st.require("variant", a.variant.as_deref())?;
            let transform = st.get("transform", a.transform.as_deref(), KernelTransform::Clip)?;
            let mode: GreedyMode = st.get("mode", a.mode.as_deref(), GreedyMode::Lazy)?;
            let s = apply_transform(&need_kernel(kernel)?, transform);
            let spec = SubmodularSpec::new(variant, s)
                .with_eta(st.get("eta", a.eta.as_deref(), submodular::DEFAULT_ETA)?)
                .with_nu(st.get("nu", a.nu.as_deref(), submodular::DEFAULT_NU)?)
                .with_cut_penalty(st.get(
                    "cut-penalty",
                    a.cut_penalty.as_deref(),
                    submodular::DEFAULT_CUT_PENALTY,
                )?)
                .with_ridge(st.get("ridge", a.ridge.as_deref(), submodular::DEFAULT_RIDGE)?)
                .with_targets(id_list(st.raw("targets", a.targets.as_deref()))?)
                .with_existing(id_list(st.raw("existing", a.existing.as_deref()))?);
            let mut r = greedy_maximize(&spec, &GreedyConfig::new(budget).with_mode(mode))?;
            r.params.insert("transform".into(), transform.to_string());
            r
        }
        "utility-diversity" => {
            let lambda = unit_interval("lambda", st.get("lambda", a.lambda.as_deref(), greedy::DEFAULT_LAMBDA)?)?;
            let transform = st.get("transform", a.transform.as_deref(), KernelTransform::Raw)?;
            let scores = scores.ok_or_else(|| anyhow!("method utility-diversity needs --scores"))?;
            let s = apply_transform(&need_kernel(kernel)?, transform);
            let mut r = utility_diversity_select(&scores, &s, &GreedyConfig::new(budget).with_lambda(lambda))?;
            r.params.insert("transform".into(), transform.to_string());
            r
        }
        other => bail!("unknown --method {other:?} (random, dpp, submodular, utility-diversity)"),
    };

    io::write_selection(&result, &a.out)?;
    st.finish(&a.out)?;
    eprintln!(
        "selected {} of budget {} with {} (objective {})",
        result.selected.len(),
        result.budget,
        result.method,
        result.objective
    );
    Ok(())
}

enum CertifyTarget {
    Submodular(Variant),
    Balanced,
}

fn cmd_certify(a: CertifyArgs, mut st: Settings) -> Result<bool> {
    let n: usize = st.get("n", a.n.as_deref(), 10)?;
    let k: usize = st.get("k", a.k.as_deref(), 3)?;
    if k > n {
        bail!("--k {k} exceeds --n {n}");
    }
    let count = oracle::binomial(n, k);
    if count > oracle::BRUTE_FORCE_LIMIT {
        bail!(subsel::Error::GuardExceeded {
            n,
            k,
            count,
            limit: oracle::BRUTE_FORCE_LIMIT
        });
    }
    let trials: usize = st.get("trials", a.trials.as_deref(), 200)?;
    let seed: u64 = st.get("seed", a.seed.as_deref(), 0)?;
    let dim: usize = st.get("dim", a.dim.as_deref(), 4)?;
    if dim == 0 {
        bail!("--dim must be positive");
    }
    let transform = st.get("transform", a.transform.as_deref(), KernelTransform::Clip)?;
    let lambda = unit_interval("lambda", st.get("lambda", a.lambda.as_deref(), greedy::DEFAULT_LAMBDA)?)?;
    let eta: f64 = st.get("eta", a.eta.as_deref(), submodular::DEFAULT_ETA)?;
    let nu: f64 = st.get("nu", a.nu.as_deref(), submodular::DEFAULT_NU)?;
    let cut: f64 = st.get("cut-penalty", a.cut_penalty.as_deref(), submodular::DEFAULT_CUT_PENALTY)?;
    let ridge: f64 = st.get("ridge", a.ridge.as_deref(), submodular::DEFAULT_RIDGE)?;
    let mode: GreedyMode = st.get("mode", a.mode.as_deref(), GreedyMode::Lazy)?;
    let variant_arg: String = st.get("variant", a.variant.as_deref(), "all".to_string())?;

    let targets: Vec<CertifyTarget> = if variant_arg == "all" {
        Variant::ALL.into_iter().map(CertifyTarget::Submodular).collect()
    } else {
        variant_arg
            .split(',')
            .map(|v| match v {
                "utility-diversity" => Ok(CertifyTarget::Balanced),
                v => Ok(CertifyTarget::Submodular(v.parse()?)),
            })
            .collect::<Result<_>>()?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = String::new();
    let (mut asserted, mut violations) = (0usize, 0usize);
    for _ in 0..trials {
        let s = oracle::random_kernel(&mut rng, n, dim, transform);
        for t in &targets {
            let report: OracleReport = match t {
                CertifyTarget::Submodular(v) => {
                    let spec = SubmodularSpec::new(*v, s.clone())
                        .with_eta(eta)
                        .with_nu(nu)
                        .with_cut_penalty(cut)
                        .with_ridge(ridge)
                        .with_targets(oracle::random_ids(&mut rng, n, (n / 3).max(1)))
                        .with_existing(oracle::random_ids(&mut rng, n, (n / 3).max(1)));
                    certify(&spec, k, mode)?
                }
                CertifyTarget::Balanced => {
                    let u: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0.0..=1.0)).collect();
                    let scores = ScoreTable::new(vec![1.0; n], vec![0.0; n], Some(u))?;
                    certify_balanced(&scores, &s, lambda, k)?
                }
            };
            asserted += usize::from(report.asserted);
            violations += usize::from(!report.passed());
            println!("{report}");
            lines.push_str(&report.to_string());
            lines.push('\n');
        }
    }
    let summary = format!(
        "trials={trials} reports={} asserted={asserted} violations={violations}",
        trials * targets.len()
    );
    println!("{summary}");
    if let Some(out) = &a.out {
        lines.push_str(&summary);
        lines.push('\n');
        std::fs::write(out, lines).with_context(|| format!("writing {}", out.display()))?;
        st.finish(out)?;
    }
    Ok(violations == 0)
}

fn cmd_report(a: ReportArgs, mut st: Settings) -> Result<()> {
    let records =
        load_results(&a.results).with_context(|| format!("results {}", a.results.display()))?;
    st.input(&a.results)?;
    if records.is_empty() {
        bail!("{}: no records", a.results.display());
    }
    let table = format_comparison(&records)?;
    print!("{table}");
    if let Some(out) = &a.out {
        std::fs::write(out, &table).with_context(|| format!("writing {}", out.display()))?;
        st.finish(out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let st = Settings::new(cli.config.as_deref())?;
    match cli.command {
        Command::Similarity(a) => cmd_similarity(a, st)?,
        Command::Utility(a) => cmd_utility(a, st)?,
        Command::PairwiseUtility(a) => cmd_pairwise(a, st)?,
        Command::Select(a) => cmd_select(a, st)?,
        Command::Certify(a) => {
            if !cmd_certify(a, st)? {
                eprintln!("error: an asserted approximation bound was violated");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report(a) => cmd_report(a, st)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<subsel::Error>())
        .any(subsel::Error::is_numeric);
    if numeric {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
