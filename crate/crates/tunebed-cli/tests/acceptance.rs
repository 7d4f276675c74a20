//! Acceptance suite: one test per shipped guarantee, each enforcing its
//! stated tolerance and wall-clock bound. `cargo test --test acceptance`
//! prints one pass/fail line per criterion (c01 through c12).

use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tunebed::curves::{optimal_n, select_family, CurveKind, LearningCurvePoint};
use tunebed::doe::lhs_encoded;
use tunebed::metrics::{dcg, relevance, total_cost, RankingPair};
use tunebed::nnls::nnls;
use tunebed::scaling::{features, ScalingModel, ScalingSample};
use tunebed::space::{Configuration, ConfigurationSpace, Domain, ParameterSpec, Value};
use tunebed::target::{ScaledTarget, Simulator, SyntheticSurface};
use tunebed::trial::{Phase, Platform};
use tunebed::tuner::{random_search, tune, uniform_config, BudgetPolicy, TuneOutcome};

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load_space() -> ConfigurationSpace {
    ConfigurationSpace::from_path(data_path("spark.space.json")).unwrap()
}

fn load_surface() -> SyntheticSurface {
    serde_json::from_str(&fs::read_to_string(data_path("demo.surface.json")).unwrap()).unwrap()
}

fn within(elapsed: Duration, limit: Duration, what: &str) {
    assert!(elapsed < limit, "{what} took {elapsed:?}, over the {limit:?} bound");
}

#[test]
fn c01_ranking_quality_worked_example() {
    let start = Instant::now();
    let pair = RankingPair::new(vec![2, 1, 3], vec![1, 2, 3]).unwrap();
    let achieved = dcg(&pair.relevance_levels());
    let ideal = dcg(&[5, 5, 5]);
    let quality = pair.ndcg();
    let elapsed = start.elapsed();

    // Frozen reference values are quoted to two decimals; the ideal gain is
    // quoted slightly off its exact value (66.059), hence the 0.05 slack.
    assert!((ideal - 66.03).abs() <= 0.05, "ideal gain {ideal} is off the 66.03 reference");
    assert!((achieved - 26.91).abs() <= 0.05, "achieved gain {achieved} is off 26.91");
    assert!((quality - 0.41).abs() <= 0.005, "quality {quality} is off 0.41");
    within(elapsed, Duration::from_millis(1), "the worked example");
    println!("c01: ideal {ideal:.2}, achieved {achieved:.2}, quality {quality:.2} in {elapsed:?}");
}

#[test]
fn c02_relevance_levels_match_the_documented_thresholds() {
    let start = Instant::now();
    // Exhaustive check of the (distance bucket -> level) table for every
    // pair of ranks at every list length up to 10.
    for n in 2..=10usize {
        for predicted in 1..=n {
            for true_rank in 1..=n {
                let d = (predicted as f64 - true_rank as f64).abs() / (n as f64 - 1.0);
                let want = if d <= 0.10 {
                    5
                } else if d <= 0.25 {
                    4
                } else if d <= 0.55 {
                    3
                } else if d <= 0.90 {
                    2
                } else {
                    0
                };
                assert_eq!(
                    relevance(predicted, true_rank, n),
                    want,
                    "rank pair ({predicted}, {true_rank}) of {n}"
                );
            }
        }
    }
    // Hand-computed row for n=5: distances 0, .25, .5, .75, 1 per |delta|.
    for (delta, want) in [(0, 5), (1, 4), (2, 3), (3, 2), (4, 0)] {
        assert_eq!(relevance(1 + delta, 1, 5), want);
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "the exhaustive relevance check");
    println!("c02: all {} pairs match in {elapsed:?}", (2..=10).map(|n| n * n).sum::<usize>());
}

/// Projected gradient descent on `min ||Ax - b||^2, x >= 0`, run to a
/// fixed-point plateau; returns the residual norm at its solution.
fn projected_gradient_residual_norm(rows: &[Vec<f64>], rhs: &[f64]) -> f64 {
    let p = rows[0].len();
    let frob: f64 = rows.iter().flatten().map(|v| v * v).sum();
    let step = 1.0 / (2.0 * frob);
    let mut x = vec![0.0; p];
    let mut prev = f64::INFINITY;
    for _ in 0..400_000 {
        let mut grad = vec![0.0; p];
        let mut obj = 0.0;
        for (row, &bi) in rows.iter().zip(rhs) {
            let r: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - bi;
            obj += r * r;
            for k in 0..p {
                grad[k] += 2.0 * row[k] * r;
            }
        }
        if prev - obj < 1e-18 * (1.0 + obj) {
            break;
        }
        prev = obj;
        for k in 0..p {
            x[k] = (x[k] - step * grad[k]).max(0.0);
        }
    }
    rows.iter()
        .zip(rhs)
        .map(|(row, &bi)| {
            let r: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() - bi;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn c03_nonnegative_fit_matches_a_projected_gradient_oracle() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4242);
    for problem in 0..20 {
        let m = 30;
        let rows: Vec<Vec<f64>> =
            (0..m).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        // Odd problems get negative true coefficients, so the fit must
        // clamp those at zero (active constraints).
        let mut truth: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..2.0)).collect();
        if problem % 2 == 1 {
            truth[1] = -truth[1];
            truth[3] = -truth[3];
        }
        let rhs: Vec<f64> = rows
            .iter()
            .map(|row| {
                let clean: f64 = row.iter().zip(&truth).map(|(a, t)| a * t).sum();
                clean + 0.01 * rng.random_range(-1.0..1.0)
            })
            .collect();

        let fit = nnls(&rows, &rhs).unwrap();
        for (j, &c) in fit.coefficients.iter().enumerate() {
            assert!(c >= 0.0, "problem {problem}: coefficient {j} is negative ({c})");
        }
        assert!(
            fit.kkt_residual <= 1e-8,
            "problem {problem}: optimality residual {} over 1e-8",
            fit.kkt_residual
        );
        let oracle = projected_gradient_residual_norm(&rows, &rhs);
        assert!(
            (fit.residual_norm - oracle).abs() <= 1e-6,
            "problem {problem}: objective {} vs oracle {oracle}",
            fit.residual_norm
        );
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5), "the 20 constrained fits");
    println!("c03: 20 problems matched the oracle in {elapsed:?}");
}

#[test]
fn c04_timing_model_recovers_known_coefficients_under_noise() {
    let start = Instant::now();
    let theta = [2.0, 5.0, 1.0, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scales = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0];
    let mut samples = Vec::new();
    'outer: for _rep in 0..3 {
        for nm in 1..=5u32 {
            for ds in scales {
                if samples.len() >= 50 {
                    break 'outer;
                }
                let x = features(ds, nm as f64);
                let clean: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
                let factor = 1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0);
                samples.push(ScalingSample { data_scale: ds, machines: nm, time_ms: clean * factor });
            }
        }
    }
    assert_eq!(samples.len(), 50);
    let model = ScalingModel::fit(&samples).unwrap();
    for (got, want) in model.coefficients().iter().zip(&theta) {
        assert!(
            (got - want).abs() / want < 0.10,
            "coefficient {got} misses {want} by more than 10%"
        );
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "the 50-sample fit");
    println!("c04: recovered {:?} in {elapsed:?}", model.coefficients());
}

#[test]
fn c05_latin_hypercube_occupancy_and_determinism() {
    let start = Instant::now();
    for n in [1usize, 2, 13] {
        let params = (0..n)
            .map(|i| ParameterSpec {
                name: format!("x{i}"),
                domain: Domain::Real { lower: 0.0, upper: 1.0 },
                default: Value::Real(0.5),
            })
            .collect();
        let space = ConfigurationSpace::new("cube", params).unwrap();
        for h in [1usize, 2, 5, 64] {
            let points = lhs_encoded(&space, h, 31).unwrap();
            assert_eq!(points.len(), h);
            for d in 0..n {
                let mut seen = vec![false; h];
                for p in &points {
                    let idx = ((p[d] * h as f64).floor() as usize).min(h - 1);
                    assert!(!seen[idx], "h={h} n={n}: interval {idx} of dim {d} hit twice");
                    seen[idx] = true;
                }
            }
            assert_eq!(points, lhs_encoded(&space, h, 31).unwrap(), "h={h} n={n} not deterministic");
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "the stratification grid");
    println!("c05: occupancy exact for h in {{1,2,5,64}} x n in {{1,2,13}} in {elapsed:?}");
}

#[test]
fn c06_learning_curve_family_selection_and_cost_optimum() {
    let start = Instant::now();
    let true_eps = |n: f64| 0.8 * n.powf(-0.5) + 0.05;
    // Brute-force cost optimum of the true curve with a 100-config
    // prediction set and unit cost ratio: 2n + eps(n)*100 is minimized at
    // n=7 (49.24 against 49.66 at n=6 and 49.28 at n=8).
    let brute = (1..=50)
        .min_by(|&a, &b| {
            total_cost(a, true_eps(a as f64), 100, 1.0)
                .total_cmp(&total_cost(b, true_eps(b as f64), 100, 1.0))
        })
        .unwrap();
    assert_eq!(brute, 7);

    let mut power_law_wins = 0;
    for seed in 0..10u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let points: Vec<LearningCurvePoint> = (1..=10)
            .map(|batch| {
                let n = batch * 5;
                let noisy = true_eps(n as f64) * (1.0 + 0.02 * rng.random_range(-1.0..1.0));
                LearningCurvePoint { n, error_rate: noisy }
            })
            .collect();
        let selection = select_family(&points).unwrap();
        if selection.best.kind == CurveKind::PowerLaw {
            power_law_wins += 1;
            let opt = optimal_n(&selection.best, 100, 1.0, 50);
            assert!(
                (opt as f64 - brute as f64).abs() / brute as f64 <= 0.25,
                "seed {seed}: optimum {opt} strays more than 25% from {brute}"
            );
        }
    }
    assert!(power_law_wins >= 8, "power law selected only {power_law_wins}/10 times");
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5), "the 10-seed family selection");
    println!("c06: power law won {power_law_wins}/10, optimum near {brute} in {elapsed:?}");
}

#[test]
fn c07_total_cost_fixture() {
    assert_eq!(total_cost(10, 0.1, 100, 1.0), 30.0);
    println!("c07: total_cost(10, 0.1, 100, 1) = 30 exactly");
}

#[test]
fn c08_testbed_ranking_fidelity_grows_with_data_scale() {
    let start = Instant::now();
    let space = load_space();
    let sim = Simulator::new(space.clone(), load_surface()).unwrap();
    let mut rng = StdRng::seed_from_u64(808);
    let configs: Vec<_> = (0..30).map(|_| uniform_config(&space, &mut rng)).collect();

    let full = ScaledTarget::new(&sim, 1.0, 5);
    let truth: Vec<f64> = configs.iter().map(|c| full.run(c, 1).unwrap()).collect();

    let ladder = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0];
    let mut prev = f64::NEG_INFINITY;
    let mut rungs = Vec::new();
    for &ds in &ladder {
        let bed = ScaledTarget::new(&sim, ds, 5);
        let predicted: Vec<f64> = configs.iter().map(|c| bed.run(c, 1).unwrap()).collect();
        let score = RankingPair::from_times(&predicted, &truth).unwrap().ndcg();
        assert!(
            score + 1e-9 >= prev,
            "ranking quality dropped from {prev:.4} to {score:.4} at data scale {ds}"
        );
        rungs.push(format!("{score:.3}"));
        prev = score;
    }

    // With the noise turned off entirely, full scale must agree exactly.
    let mut silent = load_surface();
    silent.noise = 0.0;
    let sim = Simulator::new(space, silent).unwrap();
    let full = ScaledTarget::new(&sim, 1.0, 5);
    let truth: Vec<f64> = configs.iter().map(|c| full.run(c, 3).unwrap()).collect();
    let predicted: Vec<f64> = configs.iter().map(|c| full.run(c, 9).unwrap()).collect();
    assert_eq!(RankingPair::from_times(&predicted, &truth).unwrap().ndcg(), 1.0);

    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30), "the fidelity ladder");
    println!("c08: quality ladder [{}] with exact agreement at full scale in {elapsed:?}", rungs.join(", "));
}

// Criteria 9-11 share one set of paired runs: 20 seeds, each tuning the
// bundled 13-parameter surface on the planned testbed (1/16 of the data on
// 5 machines) against a pure-random baseline under the same budget.
struct SharedRuns {
    pairs: Vec<(TuneOutcome, TuneOutcome)>,
    space: ConfigurationSpace,
    wall: Duration,
}

const PAIRED_BUDGET: f64 = 4800.0;

fn shared_runs() -> &'static SharedRuns {
    static RUNS: OnceLock<SharedRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let space = load_space();
        let sim = Simulator::new(space.clone(), load_surface()).unwrap();
        let testbed = ScaledTarget::new(&sim, 1.0 / 16.0, 5);
        let production = ScaledTarget::new(&sim, 1.0, 5);
        let policy = BudgetPolicy {
            total_ms: PAIRED_BUDGET,
            init_fraction: 0.4,
            search_fraction: 0.4,
            validation_fraction: 0.2,
            iterations: 12,
        };
        let start = Instant::now();
        let pairs = (1..=20)
            .map(|seed| {
                let tuned = tune(&testbed, &production, &space, &policy, seed).unwrap();
                let baseline = random_search(&testbed, &production, &space, &policy, seed).unwrap();
                (tuned, baseline)
            })
            .collect();
        SharedRuns { pairs, space, wall: start.elapsed() }
    })
}

#[test]
fn c09_tuner_beats_random_search_on_paired_seeds() {
    let runs = shared_runs();
    let mut wins = 0;
    let mut improvements: Vec<f64> = Vec::new();
    for (tuned, baseline) in &runs.pairs {
        if tuned.best_production_ms < baseline.best_production_ms {
            wins += 1;
        }
        improvements.push(
            (baseline.best_production_ms - tuned.best_production_ms)
                / baseline.best_production_ms
                * 100.0,
        );
    }
    improvements.sort_by(f64::total_cmp);
    let median = (improvements[9] + improvements[10]) / 2.0;
    assert!(wins >= 14, "tuner won only {wins}/20 paired seeds");
    assert!(median >= 5.0, "median improvement {median:.2}% under the 5% floor");
    within(runs.wall, Duration::from_secs(120), "the 20 paired runs");
    println!(
        "c09: {wins}/20 wins, median {median:+.2}%, range [{:+.2}%, {:+.2}%] in {:?}",
        improvements[0],
        improvements[19],
        runs.wall
    );
}

#[test]
fn c10_tuner_never_loses_to_the_default_configuration() {
    let runs = shared_runs();
    for (seed0, (tuned, _)) in runs.pairs.iter().enumerate() {
        let probe = tuned
            .log
            .records
            .iter()
            .find(|r| r.phase == Phase::Probe && r.platform == Platform::Production)
            .expect("every run starts with a full-scale probe");
        assert_eq!(
            probe.config.as_slice(),
            runs.space.default_configuration().values(),
            "the full-scale probe must measure the default configuration"
        );
        assert!(
            tuned.best_production_ms <= probe.time_ms + 1e-9,
            "seed {}: answer {} is worse than the default {}",
            seed0 + 1,
            tuned.best_production_ms,
            probe.time_ms
        );
    }
    println!("c10: answer <= default on the full-scale target for all 20 seeds");
}

/// Recomputes the incumbent set after initialization and after each loop
/// iteration from nothing but the trial log: best `b` tested testbed runs,
/// deduplicated by encoded configuration, ties broken by log order.
fn reconstruct_incumbents(space: &ConfigurationSpace, outcome: &TuneOutcome) -> Vec<Vec<usize>> {
    let b = outcome.budget.incumbent_count;
    let tested: Vec<(usize, usize, Vec<u64>, f64)> = outcome
        .log
        .records
        .iter()
        .filter(|r| {
            r.platform == Platform::Testbed
                && matches!(r.phase, Phase::Init | Phase::Explore | Phase::Exploit)
        })
        .map(|r| {
            let encoded = space.encode(&Configuration::new(r.config.clone())).unwrap();
            let key: Vec<u64> = encoded.iter().map(|x| x.to_bits()).collect();
            (r.index, r.iteration, key, r.time_ms)
        })
        .collect();
    let last_iteration = tested.iter().map(|t| t.1).max().unwrap_or(0);
    (0..=last_iteration)
        .map(|upto| {
            let mut pool: Vec<_> = tested.iter().filter(|t| t.1 <= upto).collect();
            pool.sort_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)));
            let mut seen = HashSet::new();
            let mut picks = Vec::new();
            for t in pool {
                if picks.len() == b {
                    break;
                }
                if seen.insert(t.2.clone()) {
                    picks.push(t.0);
                }
            }
            picks
        })
        .collect()
}

#[test]
fn c11_budget_safety_and_incumbent_reconstruction() {
    let runs = shared_runs();
    for (seed0, (tuned, baseline)) in runs.pairs.iter().enumerate() {
        for (label, outcome) in [("tuner", tuned), ("baseline", baseline)] {
            let max_single =
                outcome.log.records.iter().map(|r| r.charged_ms).fold(0.0, f64::max);
            assert!(
                outcome.spent_ms <= PAIRED_BUDGET + max_single + 1e-9,
                "seed {}: {label} charged {} over budget {} + one run {}",
                seed0 + 1,
                outcome.spent_ms,
                PAIRED_BUDGET,
                max_single
            );
            let charged_sum: f64 = outcome.log.records.iter().map(|r| r.charged_ms).sum();
            assert!(
                (charged_sum - outcome.spent_ms).abs() <= 1e-6 * outcome.spent_ms.max(1.0),
                "seed {}: {label} ledger does not add up",
                seed0 + 1
            );
        }
        let expected = reconstruct_incumbents(&runs.space, tuned);
        assert_eq!(
            tuned.incumbent_history, expected,
            "seed {}: incumbent history diverges from the log reconstruction",
            seed0 + 1
        );
    }
    println!("c11: budget within one-run overshoot and incumbents reconstruct for all 20 seeds");
}

#[test]
fn c12_identical_invocations_produce_identical_logs() {
    let exe = env!("CARGO_BIN_EXE_tunebed");
    let space = data_path("spark.space.json");
    let surface = data_path("demo.surface.json");
    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for out in [dirs.0.path(), dirs.1.path()] {
        let output = Command::new(exe)
            .arg("tune")
            .arg("--space")
            .arg(&space)
            .arg("--surface")
            .arg(&surface)
            .args(["--tc", "2000", "--seed", "5"])
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "tune failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let log_a = fs::read(dirs.0.path().join("trial_log.jsonl")).unwrap();
    let log_b = fs::read(dirs.1.path().join("trial_log.jsonl")).unwrap();
    assert!(!log_a.is_empty());
    assert_eq!(log_a, log_b, "trial logs differ between identical invocations");
    println!("c12: {} byte trial logs are identical", log_a.len());
}
