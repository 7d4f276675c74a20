//! Command-line driver: plan a reduced-scale testbed, tune a configuration
//! under a time budget, and compare the resulting trial logs.
//!
//! Exit codes: 0 success, 2 usage / invalid experiment setup, 3 empty plan
//! or exhausted budget, 4 replay miss, 1 anything else.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use tunebed::error::Error as LibError;
use tunebed::metrics;
use tunebed::scaling::{plan_testbeds, PlannerOptions};
use tunebed::seed::{sub_seed, Purpose};
use tunebed::space::{Configuration, ConfigurationSpace};
use tunebed::target::{ReplayTarget, ScaledTarget, Simulator, SyntheticSurface, TargetSystem};
use tunebed::trial::{LogHeader, LogWriter, Phase, Platform, TrialLog};
use tunebed::tuner::{run_tuner, Algorithm, BudgetPolicy, TuneOptions};
use tunebed::{forest, metrics::RankingPair};

const EXIT_USAGE: i32 = 2;
const EXIT_BUDGET: i32 = 3;
const EXIT_REPLAY_MISS: i32 = 4;

#[derive(Parser)]
#[command(
    name = "tunebed",
    version,
    about = "Plan reduced-scale testbeds and tune configurations under a time budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find (data scale, machines) settings whose predicted run time
    /// matches the requested fraction of a full-scale default run
    PlanTestbed(PlanArgs),
    /// Search the configuration space on a testbed, validate at full scale
    Tune(TuneArgs),
    /// Compare trial logs: best times, improvements, ranking quality
    Report(ReportArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Parameter space definition (JSON)
    #[arg(long)]
    space: PathBuf,
    /// Synthetic target surface (JSON); alternative to --replay
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Serve measurements from a recorded trial log instead of a surface
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Planning time budget, in the unit the target reports
    #[arg(long)]
    tc: f64,
    /// Desired testbed-to-production run-time ratio
    #[arg(long, default_value_t = 1.0 / 16.0)]
    scale_factor: f64,
    /// Measurements acquired per planning round
    #[arg(long, default_value_t = 5)]
    delta: usize,
    /// Resource cap: largest machine count a testbed may use
    #[arg(long)]
    rc_max_nm: Option<u32>,
    /// Resource cap: largest data fraction a testbed may use
    #[arg(long)]
    rc_max_ds: Option<f64>,
    /// Production machine count (default: the surface's environment)
    #[arg(long)]
    machines: Option<u32>,
    /// Master seed; every random choice derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Batch dispatch width allowed to the target
    #[arg(long, default_value_t = 8)]
    parallel: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    /// Parameter space definition (JSON)
    #[arg(long)]
    space: PathBuf,
    /// Synthetic target surface (JSON); alternative to --replay
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Serve measurements from a recorded trial log instead of a surface
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Total tuning budget, in the unit the target reports
    #[arg(long)]
    tc: f64,
    /// Budget fraction for initialization
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    /// Budget fraction for full-scale validation
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    /// Budget fraction for the exploration/exploitation loop
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Planned loop iterations (sizes the incumbent set)
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Searcher: autotune, random, or rbs
    #[arg(long, default_value = "autotune")]
    algorithm: String,
    /// Desired testbed-to-production time ratio; doubles as the default
    /// testbed data fraction
    #[arg(long, default_value_t = 1.0 / 16.0)]
    scale_factor: f64,
    /// Testbed data fraction (default: --scale-factor)
    #[arg(long)]
    testbed_scale: Option<f64>,
    /// Testbed machine count (default: the production count)
    #[arg(long)]
    testbed_machines: Option<u32>,
    /// Production machine count (default: the surface's environment)
    #[arg(long)]
    machines: Option<u32>,
    /// Master seed; every random choice derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Batch dispatch width allowed to targets (any width yields the
    /// same trial log)
    #[arg(long, default_value_t = 8)]
    parallel: usize,
    /// Replay this log's prefix before continuing (crash recovery)
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Trial logs to compare; the first is the baseline
    #[arg(long = "log", required = true, num_args = 1..)]
    logs: Vec<PathBuf>,
    /// Recorded execution-times fixture whose printed improvement
    /// percentages are re-derived and checked
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Marker for errors in the experiment setup itself (bad flags, missing
/// or inconsistent files) as opposed to failures while running it.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn usage_err(err: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(UsageError(err.into()))
}

/// Wrap any error from `r` as a usage error.
fn usage<T>(r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| match e.downcast::<UsageError>() {
        Ok(already) => anyhow::Error::new(already),
        Err(other) => usage_err(other),
    })
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<LibError>() {
        Some(LibError::ReplayMiss { .. }) => EXIT_REPLAY_MISS,
        Some(LibError::BudgetExhausted(_)) => EXIT_BUDGET,
        Some(LibError::InvalidInput(_) | LibError::InvalidSpace(_)) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() {
    // Die quietly when stdout closes early (`tunebed report | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PlanTestbed(args) => cmd_plan_testbed(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}

/// A loaded execution target: either a synthetic surface bound to the
/// space, or a replay of recorded measurements.
enum LoadedSystem {
    Simulated(Box<Simulator>),
    Recorded(Box<ReplayTarget>),
}

impl LoadedSystem {
    fn system(&self) -> &dyn TargetSystem {
        match self {
            LoadedSystem::Simulated(s) => s.as_ref(),
            LoadedSystem::Recorded(r) => r.as_ref(),
        }
    }
}

fn load_space(path: &Path) -> anyhow::Result<ConfigurationSpace> {
    usage(
        ConfigurationSpace::from_path(path)
            .with_context(|| format!("loading parameter space {}", path.display())),
    )
}

/// Load the target and, when a surface describes its environment, the
/// production machine count it implies.
fn load_target(
    space: &ConfigurationSpace,
    surface: &Option<PathBuf>,
    replay: &Option<PathBuf>,
) -> anyhow::Result<(LoadedSystem, Option<u32>)> {
    match (surface, replay) {
        (Some(path), None) => {
            let surface = usage(
                SyntheticSurface::from_path(path)
                    .with_context(|| format!("loading surface {}", path.display())),
            )?;
            let machines = surface.environment.as_ref().map(|e| e.machines);
            let sim = usage(
                Simulator::new(space.clone(), surface)
                    .with_context(|| format!("binding surface {}", path.display())),
            )?;
            Ok((LoadedSystem::Simulated(Box::new(sim)), machines))
        }
        (None, Some(path)) => {
            let log = usage(
                TrialLog::load(path)
                    .with_context(|| format!("loading replay log {}", path.display())),
            )?;
            if log.header.space_fingerprint != space.fingerprint() {
                return Err(usage_err(anyhow::anyhow!(
                    "replay log {} was recorded against a different parameter space",
                    path.display()
                )));
            }
            Ok((LoadedSystem::Recorded(Box::new(ReplayTarget::from_log(&log))), None))
        }
        (Some(_), Some(_)) => {
            Err(usage_err(anyhow::anyhow!("--surface and --replay are mutually exclusive")))
        }
        (None, None) => Err(usage_err(anyhow::anyhow!("one of --surface or --replay is required"))),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(value)?))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// plan-testbed
// ---------------------------------------------------------------------------

fn cmd_plan_testbed(args: PlanArgs) -> anyhow::Result<i32> {
    if args.tc <= 0.0 {
        println!("no qualifying testbed settings: planning budget is zero");
        return Ok(EXIT_BUDGET);
    }
    let space = load_space(&args.space)?;
    let (target, env_machines) = load_target(&space, &args.surface, &args.replay)?;
    let machines = args.machines.or(env_machines).unwrap_or(1);

    let mut options = PlannerOptions::new(args.tc, args.scale_factor, machines);
    options.batch_size = args.delta.max(1);
    if let Some(nm) = args.rc_max_nm {
        options.resource.max_machines = nm;
    }
    if let Some(ds) = args.rc_max_ds {
        options.resource.max_data_scale = ds;
    }
    usage(options.check().context("planner options"))?;

    let report = plan_testbeds(
        target.system(),
        &space,
        &space.default_configuration(),
        &options,
        args.seed,
    )?;

    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("plan.json"), &serde_json::to_value(&report)?)?;
    report.log.save(args.out.join("plan_log.jsonl"))?;

    if let Some(model) = &report.model {
        let c = model.coefficients();
        println!(
            "scaling fit: t = {:.4} + {:.4}*(ds/nm) + {:.4}*ln(nm) + {:.4}*nm  ({} samples)",
            c[0],
            c[1],
            c[2],
            c[3],
            model.training_size()
        );
    }
    if let Some(t0) = report.default_production_ms {
        println!(
            "full-scale default run: {t0:.2}; band target {:.2} (±{:.0}%)",
            t0 * options.scale_factor,
            options.tolerance * 100.0
        );
    }
    if let Some(n) = report.optimal_sample_size {
        let family = report
            .family
            .as_ref()
            .map(|f| format!("{:?}", f.best.kind).to_lowercase())
            .unwrap_or_else(|| "none".into());
        println!("learning curve family: {family}; cost-optimal sample size {n}");
    }
    println!("spent {:.2} of {:.2}", report.spent_ms, options.time_budget_ms);
    for note in &report.notes {
        println!("note: {note}");
    }
    if report.is_empty() {
        println!("no qualifying testbed settings within the band");
        return Ok(EXIT_BUDGET);
    }
    println!("qualifying settings (best match first):");
    println!("  {:>10}  {:>8}  {:>12}  {:>9}", "data-scale", "machines", "predicted", "deviation");
    for s in &report.settings {
        println!(
            "  {:>10.5}  {:>8}  {:>12.2}  {:>+8.1}%",
            s.data_scale,
            s.machines,
            s.predicted_ms,
            s.deviation * 100.0
        );
    }
    if let Some(r) = report.recommended() {
        println!("recommended: data-scale {:.5} on {} machines", r.data_scale, r.machines);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

fn parse_algorithm(name: &str) -> anyhow::Result<Algorithm> {
    match name.to_ascii_lowercase().as_str() {
        "autotune" => Ok(Algorithm::AutoTune),
        "random" => Ok(Algorithm::Random),
        "rbs" | "bound-and-search" => Ok(Algorithm::BoundAndSearch),
        other => Err(usage_err(anyhow::anyhow!(
            "unknown algorithm {other:?} (expected autotune, random, or rbs)"
        ))),
    }
}

fn cmd_tune(args: TuneArgs) -> anyhow::Result<i32> {
    let space = load_space(&args.space)?;
    let (target, env_machines) = load_target(&space, &args.surface, &args.replay)?;
    let algorithm = parse_algorithm(&args.algorithm)?;
    let prod_machines = args.machines.or(env_machines).unwrap_or(1);
    let testbed_scale = args.testbed_scale.unwrap_or(args.scale_factor);
    let testbed_machines = args.testbed_machines.unwrap_or(prod_machines);

    let policy = BudgetPolicy {
        total_ms: args.tc,
        init_fraction: args.alpha,
        search_fraction: args.gamma,
        validation_fraction: args.beta,
        iterations: args.iters.max(1),
    };
    usage(policy.check().context("budget policy"))?;

    let resume_log = match &args.resume {
        Some(path) => Some(usage(
            TrialLog::load(path)
                .with_context(|| format!("loading resume log {}", path.display())),
        )?),
        None => None,
    };
    let options = TuneOptions {
        algorithm,
        round_size: None,
        dispatch_width: args.parallel.max(1),
        resume: resume_log.as_ref(),
    };

    let testbed = ScaledTarget::new(target.system(), testbed_scale, testbed_machines);
    let production = ScaledTarget::new(target.system(), 1.0, prod_machines);

    std::fs::create_dir_all(&args.out)?;
    let log_path = args.out.join("trial_log.jsonl");
    let mut writer =
        LogWriter::create(&log_path, LogHeader::new(&space, algorithm.name(), args.seed))?;
    let outcome = run_tuner(&testbed, &production, &space, &policy, args.seed, &options, |r| {
        writer.append(r)
    })?;

    let default_ms = outcome
        .log
        .records
        .iter()
        .find(|r| r.phase == Phase::Probe && r.platform == Platform::Production)
        .map(|r| r.time_ms);
    let vs_default = default_ms
        .map(|d| metrics::improvement(outcome.best_production_ms, d))
        .transpose()?;

    println!("algorithm: {}  seed: {}", algorithm.name(), args.seed);
    let b = &outcome.budget;
    println!(
        "budget: {:.2} total; init {} runs, {} incumbents, {} validations (probe {:.2} testbed / {:.2} full-scale)",
        policy.total_ms,
        b.init_count,
        b.incumbent_count,
        b.validation_count,
        b.testbed_run_ms,
        b.production_run_ms
    );
    for note in &b.notes {
        println!("note: {note}");
    }
    println!(
        "spent {:.2} ({:.0}% of budget) over {} runs, {} loop iterations",
        outcome.spent_ms,
        outcome.spent_ms / policy.total_ms * 100.0,
        outcome.log.records.len(),
        outcome.iterations_run
    );
    println!(
        "best configuration (full-scale {:.2}, log record #{}):",
        outcome.best_production_ms, outcome.best_index
    );
    for (spec, value) in space.parameters().iter().zip(outcome.best.values()) {
        println!("  {} = {}", spec.name, value);
    }
    if let Some(imp) = vs_default {
        println!("improvement vs default: {imp:+.2}%");
    }

    let parameters: serde_json::Map<String, serde_json::Value> = space
        .parameters()
        .iter()
        .zip(outcome.best.values())
        .map(|(spec, value)| Ok((spec.name.clone(), serde_json::to_value(value)?)))
        .collect::<anyhow::Result<_>>()?;
    write_json(
        &args.out.join("best_config.json"),
        &json!({
            "algorithm": algorithm.name(),
            "master_seed": args.seed,
            "production_ms": outcome.best_production_ms,
            "parameters": parameters,
        }),
    )?;
    write_json(
        &args.out.join("summary.json"),
        &json!({
            "algorithm": algorithm.name(),
            "master_seed": args.seed,
            "total_budget_ms": policy.total_ms,
            "spent_ms": outcome.spent_ms,
            "best_production_ms": outcome.best_production_ms,
            "best_index": outcome.best_index,
            "iterations_run": outcome.iterations_run,
            "improvement_vs_default_percent": vs_default,
            "budget": outcome.budget,
            "incumbent_history": outcome.incumbent_history,
            "testbed": { "data_scale": testbed_scale, "machines": testbed_machines },
            "production": { "data_scale": 1.0, "machines": prod_machines },
        }),
    )?;

    // Export the surrogate view of everything measured on the testbed.
    if algorithm == Algorithm::AutoTune {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for r in &outcome.log.records {
            if r.platform == Platform::Testbed {
                xs.push(space.encode(&Configuration::new(r.config.clone()))?);
                ys.push(r.time_ms);
            }
        }
        if xs.len() >= 2 {
            let model = forest::train(&xs, &ys, 100, sub_seed(args.seed, Purpose::Model, 0))?;
            model.save(args.out.join("forest.json"))?;
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Ranking agreement between the testbed and full-scale times of every
/// configuration measured on both platforms (None if fewer than two).
fn dual_platform_ndcg(log: &TrialLog) -> Option<f64> {
    let mut testbed: HashMap<String, f64> = HashMap::new();
    let mut production: Vec<(String, f64)> = Vec::new();
    let mut seen = HashSet::new();
    for r in &log.records {
        let key = serde_json::to_string(&r.config).ok()?;
        match r.platform {
            Platform::Testbed => {
                testbed.entry(key).or_insert(r.time_ms);
            }
            Platform::Production => {
                if seen.insert(key.clone()) {
                    production.push((key, r.time_ms));
                }
            }
        }
    }
    let (tb_times, ps_times): (Vec<f64>, Vec<f64>) = production
        .into_iter()
        .filter_map(|(key, ps)| testbed.get(&key).map(|&tb| (tb, ps)))
        .unzip();
    if tb_times.len() < 2 {
        return None;
    }
    RankingPair::from_times(&tb_times, &ps_times).ok().map(|p| p.ndcg())
}

#[derive(Deserialize)]
struct Fixture {
    rows: Vec<FixtureRow>,
}

#[derive(Deserialize)]
struct FixtureRow {
    workload: String,
    production_ms: HashMap<String, f64>,
    printed: Vec<PrintedImprovement>,
}

#[derive(Deserialize)]
struct PrintedImprovement {
    evaluated: String,
    baseline: String,
    percent: f64,
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<i32> {
    let mut logs = Vec::new();
    for path in &args.logs {
        let log = usage(
            TrialLog::load(path).with_context(|| format!("loading log {}", path.display())),
        )?;
        logs.push((path.clone(), log));
    }
    let fingerprint = logs[0].1.header.space_fingerprint;
    if logs.iter().any(|(_, l)| l.header.space_fingerprint != fingerprint) {
        return Err(usage_err(anyhow::anyhow!(
            "logs cover different parameter spaces; comparisons would be meaningless"
        )));
    }

    let baseline_best = logs[0].1.best_on(Platform::Production).map(|r| r.time_ms);
    let baseline_name = logs[0].1.header.algorithm.clone();

    println!(
        "{:<24} {:>14} {:>12} {:>12} {:>11}  {}",
        "log", "best full-scale", "vs default", "vs baseline", "nDCG(tb,ps)", "charged"
    );
    let mut log_rows = Vec::new();
    for (path, log) in &logs {
        let best = log.best_on(Platform::Production);
        let default_ms = log
            .records
            .iter()
            .find(|r| r.phase == Phase::Probe && r.platform == Platform::Production)
            .map(|r| r.time_ms);
        let vs_default = match (best, default_ms) {
            (Some(b), Some(d)) => Some(metrics::improvement(b.time_ms, d)?),
            _ => None,
        };
        let vs_baseline = match (best, baseline_best) {
            (Some(b), Some(base)) => Some(metrics::improvement(b.time_ms, base)?),
            _ => None,
        };
        let ndcg = dual_platform_ndcg(log);
        let charged_tb: f64 = log
            .records
            .iter()
            .filter(|r| r.platform == Platform::Testbed)
            .map(|r| r.charged_ms)
            .sum();
        let charged_ps: f64 = log
            .records
            .iter()
            .filter(|r| r.platform == Platform::Production)
            .map(|r| r.charged_ms)
            .sum();
        let fmt_opt = |v: Option<f64>, suffix: &str| match v {
            Some(x) => format!("{x:+.2}{suffix}"),
            None => "-".into(),
        };
        println!(
            "{:<24} {:>14} {:>12} {:>12} {:>11}  {:.2} tb + {:.2} ps",
            format!("{} ({})", path.display(), log.header.algorithm),
            best.map(|b| format!("{:.2}", b.time_ms)).unwrap_or_else(|| "-".into()),
            fmt_opt(vs_default, "%"),
            fmt_opt(vs_baseline, "%"),
            fmt_opt(ndcg, ""),
            charged_tb,
            charged_ps,
        );
        log_rows.push(json!({
            "path": path.display().to_string(),
            "algorithm": log.header.algorithm,
            "records": log.records.len(),
            "best_production_ms": best.map(|b| b.time_ms),
            "best_config": best.map(|b| b.config.clone()),
            "improvement_vs_default_percent": vs_default,
            "improvement_vs_baseline_percent": vs_baseline,
            "baseline": baseline_name,
            "ndcg_testbed_vs_production": ndcg,
            "charged_ms": { "testbed": charged_tb, "production": charged_ps,
                             "total": charged_tb + charged_ps },
        }));
    }

    // Self-test: the documented three-item ranking example. Ranks (2,1,3)
    // against ideal (1,2,3) must score 0.41.
    let pair = RankingPair::new(vec![2, 1, 3], vec![1, 2, 3])
        .expect("self-test ranks are a permutation");
    let achieved = metrics::dcg(&pair.relevance_levels());
    let ideal = metrics::dcg(&[5, 5, 5]);
    let self_ndcg = pair.ndcg();
    println!(
        "ranking self-test: ideal gain {ideal:.2}, achieved gain {achieved:.2}, quality {self_ndcg:.2}"
    );

    // Optional fixture: recompute each printed improvement from the stored
    // times and flag anything off by more than rounding.
    let mut fixture_rows = Vec::new();
    let mut fixture_failures = 0usize;
    if let Some(path) = &args.fixture {
        let fixture: Fixture = usage(
            std::fs::read_to_string(path)
                .map_err(anyhow::Error::from)
                .and_then(|text| serde_json::from_str(&text).map_err(anyhow::Error::from))
                .with_context(|| format!("loading fixture {}", path.display())),
        )?;
        println!("fixture check ({}):", path.display());
        for row in &fixture.rows {
            for printed in &row.printed {
                let lookup = |name: &str| {
                    row.production_ms.get(name).copied().ok_or_else(|| {
                        usage_err(anyhow::anyhow!(
                            "fixture row {} has no time for {name:?}",
                            row.workload
                        ))
                    })
                };
                let evaluated = lookup(&printed.evaluated)?;
                let baseline = lookup(&printed.baseline)?;
                let recomputed = metrics::improvement(evaluated, baseline)?;
                let ok = (recomputed - printed.percent).abs() <= 0.005 + 1e-9;
                if !ok {
                    fixture_failures += 1;
                }
                println!(
                    "  {:<4} {:<10} vs {:<10} {:>9.0} ({recomputed:+.2}%) printed ({:+.2}%)  {}",
                    row.workload,
                    printed.evaluated,
                    printed.baseline,
                    evaluated,
                    printed.percent,
                    if ok { "ok" } else { "MISMATCH" }
                );
                fixture_rows.push(json!({
                    "workload": row.workload,
                    "evaluated": printed.evaluated,
                    "baseline": printed.baseline,
                    "recomputed_percent": recomputed,
                    "printed_percent": printed.percent,
                    "ok": ok,
                }));
            }
        }
    }

    std::fs::create_dir_all(&args.out)?;
    write_json(
        &args.out.join("report.json"),
        &json!({
            "logs": log_rows,
            "self_test": { "ideal_gain": ideal, "achieved_gain": achieved, "ndcg": self_ndcg },
            "fixture": fixture_rows,
        }),
    )?;

    if fixture_failures > 0 {
        eprintln!("{fixture_failures} fixture entries disagree with recomputed improvements");
        return Ok(1);
    }
    Ok(0)
}
