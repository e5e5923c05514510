//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute one at
//! a time and their timings are not disturbed by each other. The process
//! fails if any gating criterion fails. A criterion whose input data is not
//! available reports NOT RUN.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use kgroups::cluster::{
    build_h_matrix, delta_q, init_assignment, kgroups_sweep, kgroups_sweep_with, objective_q, run_from, solve, Algorithm,
    ClusterState, InitStrategy, SolverConfig,
};
use kgroups::datagen::{generate, Builtin, VarianceConvention};
use kgroups::energy::{lemma1_residual, within_dispersion, Partition, SemimetricMatrix, Weights};
use kgroups::eval::{monte_carlo_summary, LabelComparison};
use kgroups::exact1d::{g_sorted, solve_exact_2class, within_1d};
use kgroups::experiment::{run_experiment, DatasetSource, ExperimentConfig, Method};
use kgroups::io::MissingPolicy;
use kgroups::kernels::{gram_matrix, GramMatrix, KernelSpec, SemimetricSpec};
use kgroups::seed::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass,
    Fail,
    NotRun,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(pass: bool, detail: String) -> Self {
        Self { verdict: if pass { Verdict::Pass } else { Verdict::Fail }, detail }
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    gating: bool,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn random_spec(rng: &mut ChaCha8Rng) -> SemimetricSpec {
    match rng.random_range(0..3) {
        0 => SemimetricSpec::alpha(rng.random_range(0.1..=2.0)).unwrap(),
        1 => SemimetricSpec::exp_abs(rng.random_range(0.2..4.0)).unwrap(),
        _ => SemimetricSpec::exp_square(rng.random_range(0.2..4.0)).unwrap(),
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

/// Weights uniform on (0, 2].
fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Weights {
    Weights::new((0..n).map(|_| 2.0 - rng.random_range(0.0..2.0)).collect()).unwrap()
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Partition {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    for (j, l) in labels.iter_mut().take(k).enumerate() {
        *l = j;
    }
    Partition::new(labels, k).unwrap()
}

fn lemma1_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..=60);
        let k = rng.random_range(1..=5.min(n));
        let dim = rng.random_range(1..=4);
        let pts = random_points(&mut rng, n, dim);
        let w = random_weights(&mut rng, n);
        let part = random_partition(&mut rng, n, k);
        let rho = SemimetricMatrix::from_points(&random_spec(&mut rng), &pts).unwrap();
        let within = within_dispersion(&w, &part, &rho).unwrap();
        let r = lemma1_residual(&w, &part, &rho).unwrap();
        worst = worst.max(r.abs() / within.abs().max(1.0));
    }
    Outcome::check(worst <= 1e-10, format!("500 instances, max scaled residual {worst:.2e} (limit 1e-10)"))
}

fn delta_q_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut triples = 0;
    while triples < 1000 {
        let n = rng.random_range(3..=50);
        let k = rng.random_range(2..=5.min(n));
        let dim = rng.random_range(1..=3);
        let pts = random_points(&mut rng, n, dim);
        let g = gram_matrix(&KernelSpec::new(random_spec(&mut rng)), &pts).unwrap();
        let w = random_weights(&mut rng, n);
        let part = random_partition(&mut rng, n, k);
        let state = ClusterState::new(&g, &w, &part).unwrap();
        let i = rng.random_range(0..n);
        let ell = (part.label(i) + rng.random_range(1..k)) % k;
        let Some(gain) = delta_q(&state, &g, &w, i, ell).unwrap() else { continue };
        let mut labels = part.labels().to_vec();
        labels[i] = ell;
        let direct = objective_q(&g, &w, &Partition::new(labels, k).unwrap()).unwrap() - objective_q(&g, &w, &part).unwrap();
        worst = worst.max((gain - direct).abs() / direct.abs());
        triples += 1;
    }
    Outcome::check(worst <= 1e-9, format!("1000 triples, max relative error {worst:.2e} (limit 1e-9)"))
}

fn monotone_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = SolverConfig::default();
    let (mut bad_moves, mut unconverged, mut total_moves, mut max_passes) = (0, 0, 0, 0);
    for _ in 0..200 {
        let n = rng.random_range(10..=60);
        let k = rng.random_range(2..=5);
        let dim = rng.random_range(1..=3);
        let pts = random_points(&mut rng, n, dim);
        let g = gram_matrix(&KernelSpec::new(random_spec(&mut rng)), &pts).unwrap();
        let w = random_weights(&mut rng, n);
        let start = init_assignment(&g, &w, k, &InitStrategy::Random, &mut rng).unwrap();

        let mut state = ClusterState::new(&g, &w, &start).unwrap();
        let mut labels = start.labels().to_vec();
        let mut q = objective_q(&g, &w, &start).unwrap();
        let mut passes = 0;
        let mut converged = false;
        while passes < config.max_passes {
            let made = kgroups_sweep_with(&mut state, &g, &w, &config, |m| {
                labels[m.point] = m.to;
                let after = objective_q(&g, &w, &Partition::new(labels.clone(), k).unwrap()).unwrap();
                if !(m.gain > 0.0 && after > q) {
                    bad_moves += 1;
                }
                q = after;
                total_moves += 1;
            });
            passes += 1;
            if made == 0 {
                converged = true;
                break;
            }
        }
        max_passes = max_passes.max(passes);
        if !converged {
            unconverged += 1;
        }
        let rerun = run_from(&g, &w, &start, &config, Algorithm::KGroups).unwrap();
        if rerun.assignment.labels() != labels.as_slice() {
            bad_moves += 1;
        }
    }
    Outcome::check(
        bad_moves == 0 && unconverged == 0,
        format!(
            "200 instances, {total_moves} moves, {bad_moves} non-increasing, {unconverged} unconverged, max {max_passes} passes"
        ),
    )
}

/// Best `Q` over all two-cluster partitions, point `n-1` pinned to cluster 0.
fn enumerate_best_q(g: &GramMatrix, w: &Weights) -> f64 {
    let n = g.n();
    (1u32..(1 << (n - 1)))
        .map(|mask| {
            let labels = (0..n).map(|i| if i == n - 1 { 0 } else { ((mask >> i) & 1) as usize }).collect();
            objective_q(g, w, &Partition::new(labels, 2).unwrap()).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn exhaustive_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let config = SolverConfig { restarts: 32, ..Default::default() };
    let mut kg_hits = 0;
    for t in 0..100 {
        let n = rng.random_range(4..=12);
        let dim = rng.random_range(1..=3);
        let pts = random_points(&mut rng, n, dim);
        let g = gram_matrix(&KernelSpec::new(random_spec(&mut rng)), &pts).unwrap();
        let w = random_weights(&mut rng, n);
        let best = enumerate_best_q(&g, &w);
        let got = solve(&g, &w, 2, &SolverConfig { seed: t, ..config.clone() }, Algorithm::KGroups).unwrap();
        if got.objective >= best - 1e-9 * best.abs().max(1.0) {
            kg_hits += 1;
        }
    }
    let mut exact_hits = 0;
    let euclid = SemimetricSpec::euclidean();
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let pts: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let g = gram_matrix(&KernelSpec::new(euclid), &pts).unwrap();
        let w = Weights::unit(n);
        let best = enumerate_best_q(&g, &w);
        let r = solve_exact_2class(&x).unwrap();
        let q = objective_q(&g, &w, &r.partition).unwrap();
        if q >= best - 1e-9 * best.abs().max(1.0) {
            exact_hits += 1;
        }
    }
    Outcome::check(
        kg_hits >= 95 && exact_hits == 100,
        format!("kernel k-groups optimal in {kg_hits}/100 (need 95), exact1d optimal in {exact_hits}/100 (need 100)"),
    )
}

fn h_constraints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut neg, mut orth, mut bal, mut trace): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        let k = rng.random_range(1..=6.min(n));
        let pts = random_points(&mut rng, n, 2);
        let g = gram_matrix(&KernelSpec::new(random_spec(&mut rng)), &pts).unwrap();
        let w = random_weights(&mut rng, n);
        let part = random_partition(&mut rng, n, k);
        let h = build_h_matrix(&part, &w).unwrap();
        neg = neg.min(h.min_entry());
        orth = orth.max(h.orthonormality_error());
        bal = bal.max(h.balance_error(&w));
        let q = objective_q(&g, &w, &part).unwrap();
        trace = trace.max((h.trace_objective(&g, &w) - q).abs() / q.abs());
    }
    Outcome::check(
        neg >= 0.0 && orth <= 1e-12 && bal <= 1e-12 && trace <= 1e-9,
        format!("200 partitions: min H {neg}, |H^T H - I| {orth:.1e}, |H H^T omega - omega| {bal:.1e}, trace rel {trace:.1e}"),
    )
}

fn builtin_experiment(builtin: Builtin, n: usize, kernel: SemimetricSpec, method: Method, trials: usize, seed: u64) -> f64 {
    let config = ExperimentConfig {
        source: DatasetSource::Builtin { builtin, n, convention: VarianceConvention::default() },
        kernel: KernelSpec::new(kernel),
        method,
        k: 2,
        solver: SolverConfig::default(),
        trials,
        seed,
        output: None,
        timing: false,
    };
    run_experiment(&config).unwrap().accuracy.mean
}

fn table1() -> Outcome {
    let cigars = SemimetricSpec::exp_abs(2.0).unwrap();
    let circles = SemimetricSpec::exp_square(1.0).unwrap();
    let cig_kg = builtin_experiment(Builtin::Cigars, 800, cigars, Method::KGroups, 10, 61);
    let cig_km = builtin_experiment(Builtin::Cigars, 800, cigars, Method::KernelKMeans, 10, 61);
    let cir_kg = builtin_experiment(Builtin::Circles, 800, circles, Method::KGroups, 10, 62);
    let cir_km = builtin_experiment(Builtin::Circles, 800, circles, Method::KernelKMeans, 10, 62);
    let cir_sp = builtin_experiment(Builtin::Circles, 800, circles, Method::Spectral, 10, 62);
    let pass = [cig_kg, cig_km, cir_kg, cir_km].iter().all(|&a| a >= 0.99) && (0.60..=0.90).contains(&cir_sp);
    Outcome::check(
        pass,
        format!(
            "cigars kgroups {cig_kg:.4} kernel-kmeans {cig_km:.4}; circles kgroups {cir_kg:.4} kernel-kmeans {cir_km:.4} spectral {cir_sp:.4}"
        ),
    )
}

fn dermatology_path() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("KGROUPS_DERMATOLOGY_DATA").map(PathBuf::from),
        Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/dermatology.data")),
    ];
    candidates.into_iter().flatten().find(|p| p.is_file())
}

fn dermatology() -> Outcome {
    let Some(path) = dermatology_path() else {
        return Outcome {
            verdict: Verdict::NotRun,
            detail: "dermatology.data not found (set KGROUPS_DERMATOLOGY_DATA or add crates/core/tests/data/dermatology.data)".into(),
        };
    };
    let best_of_seeds = |policy: MissingPolicy| {
        let config = ExperimentConfig {
            source: DatasetSource::Dermatology { path: path.clone(), policy },
            kernel: KernelSpec::new(SemimetricSpec::alpha(0.5).unwrap()),
            method: Method::KGroups,
            k: 6,
            solver: SolverConfig { restarts: 5, ..Default::default() },
            trials: 5,
            seed: 7,
            output: None,
            timing: false,
        };
        let record = run_experiment(&config).unwrap();
        record.trials.iter().map(|t| (t.accuracy, t.arand)).fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (acc, ari) = best_of_seeds(MissingPolicy::MeanImpute);
    let (acc_drop, ari_drop) = best_of_seeds(MissingPolicy::DropMissing);
    Outcome::check(
        acc >= 0.95 && ari >= 0.90 && acc_drop >= 0.955,
        format!("imputed accuracy {acc:.4} arand {ari:.4}; drop-missing accuracy {acc_drop:.4} arand {ari_drop:.4}"),
    )
}

fn fig5a() -> Outcome {
    let euclid = SemimetricSpec::euclidean();
    let linear = SemimetricSpec::alpha(2.0).unwrap();
    let d10 = builtin_experiment(Builtin::Gauss1 { dim: 10 }, 200, euclid, Method::KGroups, 20, 81);
    let d50 = builtin_experiment(Builtin::Gauss1 { dim: 50 }, 200, euclid, Method::KGroups, 20, 82);
    let d50_km = builtin_experiment(Builtin::Gauss1 { dim: 50 }, 200, linear, Method::KernelKMeans, 20, 82);
    Outcome::check(
        (d10 - 0.86).abs() <= 0.05 && d50 >= d50_km - 0.02,
        format!("D=10 kgroups {d10:.4} (Bayes 0.86 +/- 0.05); D=50 kgroups {d50:.4} vs k-means {d50_km:.4}"),
    )
}

fn table2() -> Outcome {
    let mut worst_acc: f64 = 1.0;
    let mut worst_margin = f64::INFINITY;
    let mut accs = Vec::new();
    for s in 0..10 {
        let seed = derive_seed(91, s);
        let data = generate(Builtin::Lognormal1d, VarianceConvention::default(), 2000, seed).unwrap();
        let truth = data.labels.labels();
        let config = SolverConfig { seed, ..Default::default() };
        let w = Weights::unit(data.len());
        let g1 = gram_matrix(&KernelSpec::new(SemimetricSpec::euclidean()), &data.points).unwrap();
        let kg = solve(&g1, &w, 2, &config, Algorithm::KGroups).unwrap();
        let g2 = gram_matrix(&KernelSpec::new(SemimetricSpec::alpha(2.0).unwrap()), &data.points).unwrap();
        let km = solve(&g2, &w, 2, &config, Algorithm::KernelKMeans).unwrap();
        let a = LabelComparison::new(kg.assignment.labels(), truth).unwrap().accuracy();
        let b = LabelComparison::new(km.assignment.labels(), truth).unwrap().accuracy();
        worst_acc = worst_acc.min(a);
        worst_margin = worst_margin.min(a - b);
        accs.push(a);
    }
    let mean = monte_carlo_summary(&accs).unwrap().mean;
    Outcome::check(
        worst_acc >= 0.75 && worst_margin >= 0.15,
        format!("10 seeds: kgroups min {worst_acc:.4} mean {mean:.4}, min margin over k-means {worst_margin:.4}"),
    )
}

fn appendix() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut g_err: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(1..=100);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        x.sort_by(f64::total_cmp);
        let nf = n as f64;
        let brute: f64 = x.iter().map(|a| x.iter().map(|b| (a - b).abs()).sum::<f64>()).sum::<f64>() / (nf * nf);
        let fast = g_sorted(&x).unwrap();
        let err = if brute == 0.0 { fast.abs() } else { (fast - brute).abs() / brute.abs() };
        g_err = g_err.max(err);
    }
    let mut split_mismatch = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let r = solve_exact_2class(&x).unwrap();
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        let (mut best_j, mut best_w) = (0, f64::INFINITY);
        for j in 1..n {
            let w = within_1d(&[&sorted[..j], &sorted[j..]]).unwrap();
            if w < best_w {
                (best_j, best_w) = (j, w);
            }
        }
        if r.split != best_j || r.within != best_w {
            split_mismatch += 1;
        }
    }
    let mut all_mismatch = 0;
    let euclid = SemimetricSpec::euclidean();
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let pts: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let rho = SemimetricMatrix::from_points(&euclid, &pts).unwrap();
        let w = Weights::unit(n);
        let best = (1u32..(1 << (n - 1)))
            .map(|mask| {
                let labels = (0..n).map(|i| if i == n - 1 { 0 } else { ((mask >> i) & 1) as usize }).collect();
                within_dispersion(&w, &Partition::new(labels, 2).unwrap(), &rho).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        let r = solve_exact_2class(&x).unwrap();
        if (r.within - best).abs() > 1e-10 * best.abs().max(1e-12) {
            all_mismatch += 1;
        }
    }
    Outcome::check(
        g_err <= 1e-10 && split_mismatch == 0 && all_mismatch == 0,
        format!(
            "g_sorted max rel err {g_err:.1e}; split search mismatches {split_mismatch}/200; all-bipartition mismatches {all_mismatch}/200"
        ),
    )
}

fn complexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut times = Vec::new();
    for n in [500usize, 1000, 2000] {
        let pts = random_points(&mut rng, n, 2);
        let g = gram_matrix(&KernelSpec::new(SemimetricSpec::euclidean()), &pts).unwrap();
        let w = Weights::unit(n);
        let start = init_assignment(&g, &w, 5, &InitStrategy::Random, &mut rng).unwrap();
        let config = SolverConfig::default();
        // best of 5 single passes from the same start
        let best = (0..5)
            .map(|_| {
                let mut state = ClusterState::new(&g, &w, &start).unwrap();
                let t = Instant::now();
                kgroups_sweep(&mut state, &g, &w, &config);
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        times.push((n, best));
    }
    let ratios: Vec<f64> = times.windows(2).map(|p| p[1].1 / p[0].1).collect();
    let pass = ratios.iter().all(|&r| r <= 4.0 * 1.5);
    let listing: Vec<String> = times.iter().map(|(n, t)| format!("n={n} {:.2} ms", t * 1e3)).collect();
    Outcome::check(
        pass,
        format!("{}; doubling ratios {:?} (quadratic 4.0, limit 6.0)", listing.join(", "), ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()),
    )
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "Lemma 1 identity", gating: true, budget: Some(Duration::from_secs(30)), run: lemma1_suite },
        Criterion { id: 2, title: "move-gain oracle", gating: true, budget: Some(Duration::from_secs(30)), run: delta_q_oracle },
        Criterion { id: 3, title: "monotone convergence", gating: true, budget: None, run: monotone_convergence },
        Criterion { id: 4, title: "exhaustive optimality", gating: true, budget: None, run: exhaustive_optimality },
        Criterion { id: 5, title: "H constraints", gating: true, budget: None, run: h_constraints },
        Criterion { id: 6, title: "cigars and circles", gating: true, budget: Some(Duration::from_secs(300)), run: table1 },
        Criterion { id: 7, title: "dermatology", gating: true, budget: None, run: dermatology },
        Criterion { id: 8, title: "gauss1 dimension check", gating: true, budget: None, run: fig5a },
        Criterion { id: 9, title: "lognormal 1-D", gating: true, budget: None, run: table2 },
        Criterion { id: 10, title: "exact 1-D solver", gating: true, budget: None, run: appendix },
        Criterion { id: 11, title: "pass complexity (non-gating)", gating: false, budget: None, run: complexity },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Some(budget), Verdict::Pass) = (c.budget, &outcome.verdict) {
            if elapsed > budget {
                outcome.verdict = Verdict::Fail;
                outcome.detail.push_str(&format!("; over the {}s budget", budget.as_secs()));
            }
        }
        let label = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotRun => "NOT RUN",
        };
        println!("criterion {:>2} {label}: {} ({:.2}s) {}", c.id, c.title, elapsed.as_secs_f64(), outcome.detail);
        if matches!(outcome.verdict, Verdict::Fail) && c.gating {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
