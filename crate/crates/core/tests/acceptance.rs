//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{random_scores, random_spec, random_subset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsel::baselines::{random_select, RandomConfig};
use subsel::evaluation::{diversity_score, objective_value};
use subsel::greedy::{greedy_maximize, utility_diversity_select, GreedyConfig, GreedyMode};
use subsel::oracle::{certify, random_kernel, APPROX_BOUND};
use subsel::scoring::pmi_utility;
use subsel::similarity::KernelTransform;
use subsel::submodular::{SubmodularSpec, Variant};
use subsel::{ScoreTable, SimilarityMatrix, TokenProbRecord};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

/// Raw cosine kernel over `d >= n` generic directions, so every principal
/// minor is positive definite once a small ridge is added.
fn full_rank_log_det(rng: &mut ChaCha8Rng, n: usize, ridge: f64) -> SubmodularSpec {
    let d = n + rng.gen_range(0..=4);
    SubmodularSpec::new(Variant::LogDeterminant, random_kernel(rng, n, d, KernelTransform::Raw)).with_ridge(ridge)
}

fn approximation_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut reports, mut asserted, mut min_ratio) = (0usize, 0usize, f64::INFINITY);
    let mut failures = Vec::new();
    for _ in 0..200 {
        let n = rng.gen_range(5..=12);
        let k = rng.gen_range(1..=4);
        for variant in Variant::ALL {
            // log-det on the clipped kernel with a unit ridge: log det(I + S_X)
            let ridge = if variant == Variant::LogDeterminant { 1.0 } else { 0.0 };
            let spec = random_spec(&mut rng, variant, n, ridge);
            let r = certify(&spec, k, GreedyMode::Lazy).map_err(|e| format!("{variant}: {e}"))?;
            reports += 1;
            asserted += usize::from(r.asserted);
            if let Some(x) = r.ratio {
                min_ratio = min_ratio.min(x);
            }
            if !r.satisfied {
                failures.push(r.to_string());
            }
        }
    }
    let elapsed = start.elapsed();
    if !failures.is_empty() {
        return Err(format!("{} of {reports} reports below the bound; first: {}", failures.len(), failures[0]));
    }
    if elapsed >= Duration::from_secs(120) {
        return Err(format!("took {elapsed:.1?}, limit 120s"));
    }
    Ok(format!(
        "{reports} reports (200 instances x 5 objectives, n<=12, k<=4), {asserted} monotone submodular, min ratio {min_ratio:.6} >= {APPROX_BOUND}, {elapsed:.1?}"
    ))
}

fn modular_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(4..=12);
        let k = rng.gen_range(1..=4.min(n));
        let spec = random_spec(&mut rng, Variant::GraphCut, n, 0.0).with_cut_penalty(0.0);
        let r = certify(&spec, k, GreedyMode::Naive).map_err(|e| e.to_string())?;
        let dev = (r.ratio.ok_or("optimum is not positive")? - 1.0).abs();
        worst = worst.max(dev);
        if dev > 1e-9 {
            return Err(r.to_string());
        }
    }
    Ok(format!("50 graph-cut instances with zero penalty, max |ratio - 1| = {worst:.1e}"))
}

fn lazy_naive_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    for variant in Variant::ALL {
        for t in 0..100 {
            let n = rng.gen_range(10..=50);
            let k = rng.gen_range(1..=10);
            let spec = if variant == Variant::LogDeterminant {
                full_rank_log_det(&mut rng, n, 1e-6)
            } else {
                random_spec(&mut rng, variant, n, 0.0)
            };
            let run = |mode| greedy_maximize(&spec, &GreedyConfig::new(k).with_mode(mode)).map_err(|e| e.to_string());
            let (naive, lazy) = (run(GreedyMode::Naive)?, run(GreedyMode::Lazy)?);
            let gains_match = naive.gains.iter().zip(&lazy.gains).all(|(a, b)| (a - b).abs() <= 1e-9);
            if naive.selected != lazy.selected || !gains_match {
                return Err(format!("{variant} instance {t}: naive {:?} lazy {:?}", naive.selected, lazy.selected));
            }
        }
    }
    Ok("5 objectives x 100 instances (n<=50, k<=10): identical sequences, gains within 1e-9".into())
}

fn incremental_coherence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for variant in Variant::ALL {
        for _ in 0..40 {
            let n = rng.gen_range(2..=20);
            let spec = if variant == Variant::LogDeterminant {
                full_rank_log_det(&mut rng, n, 1e-6)
            } else {
                random_spec(&mut rng, variant, n, 0.0)
            };
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut state = spec.init_state().map_err(|e| e.to_string())?;
            for t in 0..n {
                let v = order[t];
                let g = spec.marginal_gain(&state, v).map_err(|e| e.to_string())?;
                let before = state.value();
                spec.commit(&mut state, v).map_err(|e| e.to_string())?;
                let scratch = spec.eval(&order[..=t]).map_err(|e| e.to_string())?;
                let dev = (state.value() - scratch).abs().max((before + g - scratch).abs());
                worst = worst.max(dev);
                if dev > 1e-8 {
                    return Err(format!("{variant}: state {} vs scratch {scratch}", state.value()));
                }
            }
        }
    }
    Ok(format!("5 objectives x 40 full trajectories (log-det ridge 1e-6), max deviation {worst:.1e}"))
}

fn pmi_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = rng.gen_range(1..=20);
        let base: Vec<f64> = (0..t).map(|_| rng.gen_range(1e-6..=1.0)).collect();
        let cond: Vec<f64> = (0..t).map(|_| rng.gen_range(1e-6..=1.0)).collect();
        let expected: f64 = cond.iter().zip(&base).map(|(c, b)| c.ln() - b.ln()).sum();
        let r = TokenProbRecord::new(0, 1, base.clone(), cond).map_err(|e| e.to_string())?;
        let same = TokenProbRecord::new(0, 1, base.clone(), base).map_err(|e| e.to_string())?;
        worst = worst.max((pmi_utility(&r) - expected).abs()).max(pmi_utility(&same).abs());
    }
    if worst > 1e-9 {
        return Err(format!("max deviation {worst:.1e}"));
    }
    Ok(format!("1000 random records, max deviation {worst:.1e} (including base = cond)"))
}

fn diversity_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = rng.gen_range(1..=20);
        let s = random_kernel(&mut rng, n, 4, KernelTransform::Raw);
        let scores = random_scores(&mut rng, n);
        let a = random_subset(&mut rng, n);
        let mut unordered = 0.0;
        for (x, &i) in a.iter().enumerate() {
            for &j in &a[x + 1..] {
                unordered += 1.0 - s.get(i, j);
            }
        }
        let d = diversity_score(&s, &a).map_err(|e| e.to_string())?;
        let f = |l: f64| objective_value(&scores, &s, &a, l).map_err(|e| e.to_string());
        worst = worst
            .max((d - 2.0 * unordered).abs())
            .max((f(1.0)? + f(0.0)? - 2.0 * f(0.5)?).abs());
    }
    if worst > 1e-9 {
        return Err(format!("max deviation {worst:.1e}"));
    }
    Ok(format!("500 random subsets, doubling and lambda-affinity max deviation {worst:.1e}"))
}

fn hand_instances() -> Outcome {
    let s = SimilarityMatrix::from_rows(&[vec![1.0, 0.99, 0.0], vec![0.99, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
        .map_err(|e| e.to_string())?;
    let scores = ScoreTable::new(vec![1.0; 3], vec![0.0; 3], Some(vec![0.9, 0.8, 0.1])).map_err(|e| e.to_string())?;
    let ud = utility_diversity_select(&scores, &s, &GreedyConfig::new(2).with_lambda(0.5)).map_err(|e| e.to_string())?;
    let ud_ok = ud.selected == [0, 2] && (ud.gains[0] - 0.45).abs() < 1e-12 && (ud.gains[1] - 0.55).abs() < 1e-12;

    let s = SimilarityMatrix::from_rows(&[vec![1.0, 0.9, 0.1], vec![0.9, 1.0, 0.1], vec![0.1, 0.1, 1.0]])
        .map_err(|e| e.to_string())?;
    let fl = greedy_maximize(&SubmodularSpec::new(Variant::FacilityLocation, s), &GreedyConfig::new(2))
        .map_err(|e| e.to_string())?;
    let fl_ok = fl.selected == [0, 2] && (fl.gains[0] - 2.0).abs() < 1e-12 && (fl.gains[1] - 0.9).abs() < 1e-12;

    let line = format!(
        "utility-diversity {:?} gains {:?}; facility-location {:?} gains {:?}",
        ud.selected, ud.gains, fl.selected, fl.gains
    );
    if ud_ok && fl_ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_subsel"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let s = random_kernel(&mut rng, 30, 8, KernelTransform::Raw);
    subsel::io::write_similarity(&s, &p.join("k.sim")).map_err(|e| e.to_string())?;
    subsel::io::write_scores(&random_scores(&mut rng, 30), &p.join("u.scores")).map_err(|e| e.to_string())?;
    let runs: [&[&str]; 4] = [
        &["--method", "random", "--n", "30", "--budget", "8", "--seed", "17"],
        &["--method", "dpp", "--budget", "8", "--similarity", "k.sim"],
        &["--method", "submodular", "--variant", "facility-location", "--budget", "8", "--similarity", "k.sim"],
        &["--method", "utility-diversity", "--budget", "8", "--similarity", "k.sim", "--scores", "u.scores"],
    ];
    for args in runs {
        let mut files = Vec::new();
        for out in ["first.sel", "second.sel"] {
            let mut full = vec!["select"];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--out", out]);
            run_cli(p, &full)?;
            files.push(fs::read(p.join(out)).map_err(|e| e.to_string())?);
        }
        if files[0] != files[1] {
            return Err(format!("{args:?} produced different files"));
        }
    }

    let mut counts = [0u32; 4];
    for seed in 0..10_000 {
        let r = random_select(4, &RandomConfig { seed, budget: 1 }).map_err(|e| e.to_string())?;
        counts[r.selected[0]] += 1;
    }
    let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
    if counts.iter().any(|&c| (f64::from(c) - 2500.0).abs() > 3.0 * sd) {
        return Err(format!("random frequencies {counts:?} outside 2500 +/- {:.1}", 3.0 * sd));
    }
    Ok(format!(
        "4 selection methods byte-identical across two runs; random frequencies {counts:?} within 2500 +/- {:.1}",
        3.0 * sd
    ))
}

const TABLE: [(u32, [&str; 3]); 7] = [
    (900, ["0.41", "0.49", "0.42"]),
    (1000, ["0.41", "0.46", "0.47"]),
    (1100, ["0.40", "0.44", "0.40"]),
    (1300, ["0.42", "0.45", "0.47"]),
    (1500, ["0.43", "0.47", "0.46"]),
    (1700, ["0.48", "0.43", "0.45"]),
    (1900, ["0.44", "0.45", "0.50"]),
];

fn table_report() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/comparison.results");
    let o = Command::new(env!("CARGO_BIN_EXE_subsel"))
        .args(["report", "--results"])
        .arg(&fixture)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let rows: Vec<Vec<String>> = out
        .lines()
        .filter(|l| l.starts_with('|'))
        .map(|l| l.split('|').map(str::trim).filter(|c| !c.is_empty()).map(String::from).collect())
        .collect();
    let header = &rows[0];
    if header[1..] != ["Random Selection", "DPP (Greedy)", "Our Method"] {
        return Err(format!("unexpected columns {header:?}"));
    }
    let mut cells = 0;
    for (budget, values) in TABLE {
        let row = rows
            .iter()
            .find(|r| r[0] == budget.to_string())
            .ok_or(format!("missing row {budget}"))?;
        if row[1..] != values {
            return Err(format!("row {budget}: {:?} expected {values:?}", &row[1..]));
        }
        cells += values.len();
    }
    Ok(format!("{cells} of {cells} cells reproduced at 2 decimals"))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("approximation bound", approximation_bound),
        ("oracle equivalence on modular objectives", modular_exactness),
        ("lazy/naive identity", lazy_naive_identity),
        ("incremental-state coherence", incremental_coherence),
        ("log-ratio utility identity", pmi_identity),
        ("diversity doubling and lambda-affinity", diversity_identities),
        ("hand instances", hand_instances),
        ("determinism", determinism),
        ("comparison table fixture", table_report),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
