mod common;

use common::{random_scores, random_spec, raw_kernel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subsel::baselines::{dpp_greedy_select, random_select, RandomConfig};
use subsel::greedy::{greedy_maximize, utility_diversity_select, GreedyConfig, GreedyMode};
use subsel::oracle::{brute_force_optimum, certify, certify_balanced, SetFunction, APPROX_BOUND};
use subsel::submodular::{SubmodularSpec, Variant};
use subsel::{ScoreTable, SimilarityMatrix};

fn log_det_spec(rng: &mut ChaCha8Rng, n: usize, ridge: f64) -> SubmodularSpec {
    SubmodularSpec::new(Variant::LogDeterminant, raw_kernel(rng, n)).with_ridge(ridge)
}

#[test]
fn lazy_matches_naive() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for variant in Variant::ALL {
        for _ in 0..20 {
            let n = rng.gen_range(1..=30);
            let k = rng.gen_range(0..=n.min(8));
            let spec = if variant == Variant::LogDeterminant {
                log_det_spec(&mut rng, n, 1e-2)
            } else {
                random_spec(&mut rng, variant, n, 0.0)
            };
            let naive = greedy_maximize(&spec, &GreedyConfig::new(k).with_mode(GreedyMode::Naive)).unwrap();
            let lazy = greedy_maximize(&spec, &GreedyConfig::new(k).with_mode(GreedyMode::Lazy)).unwrap();
            assert_eq!(naive.selected, lazy.selected, "{variant}");
            for (a, b) in naive.gains.iter().zip(&lazy.gains) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn monotone_gains_do_not_increase() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for variant in [Variant::FacilityLocation, Variant::MutualInformation, Variant::ConditionalGain] {
        for _ in 0..20 {
            let n = rng.gen_range(2..=20);
            let spec = random_spec(&mut rng, variant, n, 0.0);
            let r = greedy_maximize(&spec, &GreedyConfig::new(n)).unwrap();
            assert!(r.gains.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", r.gains);
            let mut all = r.selected.clone();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            assert!((r.objective - spec.eval(&all).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn budget_zero_and_budget_too_large() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let spec = random_spec(&mut rng, Variant::FacilityLocation, 5, 0.0);
    let r = greedy_maximize(&spec, &GreedyConfig::new(0)).unwrap();
    assert!(r.selected.is_empty());
    assert_eq!(r.objective, 0.0);
    assert!(greedy_maximize(&spec, &GreedyConfig::new(6)).is_err());
}

#[test]
fn greedy_meets_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for variant in Variant::ALL {
        for _ in 0..15 {
            let n = rng.gen_range(4..=10);
            let k = rng.gen_range(1..=3);
            let spec = if variant == Variant::LogDeterminant {
                log_det_spec(&mut rng, n, 1.0)
            } else {
                random_spec(&mut rng, variant, n, 0.0)
            };
            let r = certify(&spec, k, GreedyMode::Lazy).unwrap();
            assert!(r.asserted, "{r}");
            assert!(r.satisfied, "{r}");
            assert!(r.ratio.unwrap() <= 1.0 + 1e-9);
        }
    }
}

/// Enumerates subsets as bitmasks, independently of the oracle's
/// combination walk.
fn bitmask_optimum<F: SetFunction>(f: &F, k: usize) -> (Vec<usize>, f64) {
    let n = f.ground_size();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let v = f.value(&set).unwrap();
        let better = match &best {
            None => true,
            Some((bs, bv)) => v > *bv || (v == *bv && set < *bs),
        };
        if better {
            best = Some((set, v));
        }
    }
    best.unwrap()
}

#[test]
fn oracle_agrees_with_bitmask_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..10 {
        let spec = random_spec(&mut rng, Variant::FacilityLocation, 10, 0.0);
        let (set, v) = brute_force_optimum(&spec, 3).unwrap();
        let (bset, bv) = bitmask_optimum(&spec, 3);
        assert_eq!(set, bset);
        assert_eq!(v, bv);
    }
}

fn permute(s: &SimilarityMatrix, p: &[usize]) -> SimilarityMatrix {
    // new id a corresponds to old id p[a]
    let rows: Vec<Vec<f64>> = (0..s.n()).map(|a| (0..s.n()).map(|b| s.get(p[a], p[b])).collect()).collect();
    SimilarityMatrix::from_rows(&rows).unwrap()
}

#[test]
fn oracle_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..10 {
        let spec = random_spec(&mut rng, Variant::FacilityLocation, 9, 0.0);
        let (_, v) = brute_force_optimum(&spec, 3).unwrap();
        for _ in 0..3 {
            let mut p: Vec<usize> = (0..9).collect();
            p.shuffle(&mut rng);
            let permuted = SubmodularSpec::new(Variant::FacilityLocation, permute(spec.kernel(), &p));
            let (pset, pv) = brute_force_optimum(&permuted, 3).unwrap();
            assert!((pv - v).abs() < 1e-12);
            // the relabeled optimum is optimal for the original
            let back: Vec<usize> = pset.iter().map(|&a| p[a]).collect();
            assert!((spec.eval(&back).unwrap() - v).abs() < 1e-12);
        }
    }
}

#[test]
fn modular_objective_is_solved_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..20 {
        let n = rng.gen_range(3..=10);
        let k = rng.gen_range(1..=n.min(4));
        let spec = random_spec(&mut rng, Variant::GraphCut, n, 0.0).with_cut_penalty(0.0);
        let r = certify(&spec, k, GreedyMode::Naive).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() <= 1e-9, "{r}");
    }
}

#[test]
fn balanced_objective_is_reported_not_asserted() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for _ in 0..10 {
        let s = raw_kernel(&mut rng, 8);
        let scores = random_scores(&mut rng, 8);
        let r = certify_balanced(&scores, &s, 0.5, 3).unwrap();
        assert!(!r.asserted);
        assert!(r.passed());
        assert!(r.ratio.is_none_or(|x| x <= 1.0 + 1e-9));
        assert_eq!(r.bound, APPROX_BOUND);
    }
}

#[test]
fn utility_diversity_hand_instance() {
    let s = SimilarityMatrix::from_rows(&[
        vec![1.0, 0.99, 0.0],
        vec![0.99, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    let scores = ScoreTable::new(vec![1.0; 3], vec![0.0; 3], Some(vec![0.9, 0.8, 0.1])).unwrap();
    let r = utility_diversity_select(&scores, &s, &GreedyConfig::new(2).with_lambda(0.5)).unwrap();
    assert_eq!(r.selected, vec![0, 2]);
    assert!((r.gains[0] - 0.45).abs() < 1e-12);
    assert!((r.gains[1] - 0.55).abs() < 1e-12);
}

#[test]
fn utility_diversity_edge_lambdas() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let s = raw_kernel(&mut rng, 10);
    let scores = random_scores(&mut rng, 10);
    let u = scores.utility().unwrap().to_vec();
    let r = utility_diversity_select(&scores, &s, &GreedyConfig::new(4).with_lambda(1.0)).unwrap();
    let mut top: Vec<usize> = (0..10).collect();
    top.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
    assert_eq!(r.selected, top[..4]);
    let r = utility_diversity_select(&scores, &s, &GreedyConfig::new(1).with_lambda(0.0)).unwrap();
    assert_eq!(r.selected, vec![0]);
}

#[test]
fn utility_diversity_is_deterministic_and_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..20 {
        let n = rng.gen_range(3..=15);
        let k = rng.gen_range(1..=n);
        let lambda = rng.gen_range(0.0..=1.0);
        let s = raw_kernel(&mut rng, n);
        let scores = random_scores(&mut rng, n);
        let cfg = GreedyConfig::new(k).with_lambda(lambda);
        let a = utility_diversity_select(&scores, &s, &cfg).unwrap();
        assert_eq!(a, utility_diversity_select(&scores, &s, &cfg).unwrap());

        // scaling both terms by c: U -> cU and (1 - S) -> c(1 - S)
        let c = 0.5;
        let u: Vec<f64> = scores.utility().unwrap().iter().map(|x| c * x).collect();
        let scaled_scores = scores.with_utility(u).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| 1.0 - c * (1.0 - s.get(i, j))).collect())
            .collect();
        let scaled_s = SimilarityMatrix::from_rows(&rows).unwrap();
        let b = utility_diversity_select(&scaled_scores, &scaled_s, &cfg).unwrap();
        assert_eq!(a.selected, b.selected);
        for (x, y) in a.gains.iter().zip(&b.gains) {
            assert!((c * x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn random_select_is_uniform() {
    let mut counts = [0u32; 4];
    for seed in 0..10_000 {
        let r = random_select(4, &RandomConfig { seed, budget: 1 }).unwrap();
        counts[r.selected[0]] += 1;
    }
    // binomial(10^4, 1/4): mean 2500, sd sqrt(1875)
    let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
    for c in counts {
        assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
    }
}

#[test]
fn random_select_never_repeats() {
    for seed in 0..200 {
        let r = random_select(20, &RandomConfig { seed, budget: 12 }).unwrap();
        let mut ids = r.selected.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 12);
    }
}

#[test]
fn dpp_matches_log_det_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let s = raw_kernel(&mut rng, 12);
    let dpp = dpp_greedy_select(&s, 5, 1e-6).unwrap();
    let spec = SubmodularSpec::new(Variant::LogDeterminant, s).with_ridge(1e-6);
    let mut direct = greedy_maximize(&spec, &GreedyConfig::new(5)).unwrap();
    direct.method = "dpp".into();
    assert_eq!(dpp, direct);
}

#[test]
fn dpp_avoids_exact_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        // four distinct directions in 6-d, each duplicated
        let base: Vec<Vec<f64>> = (0..4).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut rows = base.clone();
        rows.extend(base.iter().cloned());
        let e = subsel::EmbeddingMatrix::from_rows(&rows).unwrap();
        let s = subsel::similarity::cosine_similarity_matrix(&e).unwrap();
        let r = dpp_greedy_select(&s, 4, 1e-6).unwrap();
        let mut dirs: Vec<usize> = r.selected.iter().map(|&i| i % 4).collect();
        dirs.sort_unstable();
        dirs.dedup();
        assert_eq!(dirs.len(), 4, "{:?}", r.selected);
    }
}
