//! Testbed planning: learn how execution time scales with data size and
//! cluster size, then propose cheap testbed settings.
//!
//! The scaling model is
//!
//! ```text
//! t(ds, nm) = c0 + c1 * (ds / nm) + c2 * ln(nm) + c3 * nm
//! ```
//!
//! — a fixed cost, a perfectly-parallel share of the data, a coordination
//! term, and a per-machine overhead — fitted with non-negative least
//! squares (each term can only add time).
//!
//! [`plan_testbeds`] drives the whole planning pass: it measures the
//! default configuration at small (data scale, machines) points in batches
//! of `batch_size`, watches the model's held-out error as a learning curve,
//! keeps sampling while that curve has not clearly started decreasing,
//! projects the curve to pick the cost-optimal sample size, tops up,
//! anchors against one full-scale run, and returns every grid setting whose
//! predicted time lands within a tolerance band of `t0 * scale_factor`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{select_family, optimal_n, FamilySelection, LearningCurvePoint};
use crate::error::{Error, Result};
use crate::nnls;
use crate::par;
use crate::seed::{sub_seed, Purpose};
use crate::space::{Configuration, ConfigurationSpace};
use crate::target::TargetSystem;
use crate::trial::{LogHeader, Phase, Platform, TrialLog, TrialRecord};

/// One timing measurement of the default configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub data_scale: f64,
    pub machines: u32,
    pub time_ms: f64,
}

impl ScalingSample {
    pub fn check(&self) -> Result<()> {
        if !(self.data_scale > 0.0 && self.data_scale <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "data scale {} outside (0, 1]",
                self.data_scale
            )));
        }
        if self.machines == 0 {
            return Err(Error::InvalidInput("machine count must be at least 1".into()));
        }
        if !(self.time_ms.is_finite() && self.time_ms > 0.0) {
            return Err(Error::InvalidInput(format!("time {} must be positive", self.time_ms)));
        }
        Ok(())
    }
}

/// Regressor row for one operating point: `(1, ds/nm, ln nm, nm)`.
///
/// `machines` is accepted as a real so tests can probe the logarithm
/// directly; real callers pass whole machine counts.
pub fn features(data_scale: f64, machines: f64) -> [f64; 4] {
    assert!(data_scale > 0.0, "data scale must be positive");
    assert!(machines >= 1.0, "machine count must be at least 1");
    [1.0, data_scale / machines, machines.ln(), machines]
}

/// The fitted scaling model (all coefficients non-negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    coefficients: [f64; 4],
    residual_norm: f64,
    kkt_residual: f64,
    training_size: usize,
}

impl ScalingModel {
    /// Fit by non-negative least squares. Requires at least 4 samples
    /// spanning at least 2 distinct machine counts and 2 distinct data
    /// scales — with less diversity the four terms are not identifiable.
    pub fn fit(samples: &[ScalingSample]) -> Result<Self> {
        for s in samples {
            s.check()?;
        }
        if samples.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "scaling fit needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        let distinct_nm =
            samples.iter().map(|s| s.machines).collect::<std::collections::BTreeSet<_>>().len();
        let distinct_ds = samples
            .iter()
            .map(|s| s.data_scale.to_bits())
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        if distinct_nm < 2 || distinct_ds < 2 {
            return Err(Error::InsufficientData(format!(
                "scaling fit needs >= 2 distinct machine counts and data scales \
                 (got {distinct_nm} and {distinct_ds})"
            )));
        }
        let rows: Vec<Vec<f64>> =
            samples.iter().map(|s| features(s.data_scale, s.machines as f64).to_vec()).collect();
        let times: Vec<f64> = samples.iter().map(|s| s.time_ms).collect();
        let fit = nnls::nnls(&rows, &times)?;
        let mut coefficients = [0.0; 4];
        coefficients.copy_from_slice(&fit.coefficients);
        Ok(ScalingModel {
            coefficients,
            residual_norm: fit.residual_norm,
            kkt_residual: fit.kkt_residual,
            training_size: samples.len(),
        })
    }

    pub fn predict(&self, data_scale: f64, machines: u32) -> f64 {
        let x = features(data_scale, machines as f64);
        x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    pub fn coefficients(&self) -> &[f64; 4] {
        &self.coefficients
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn training_size(&self) -> usize {
        self.training_size
    }

    /// Mean absolute percentage error against held-out samples.
    pub fn mape(&self, samples: &[ScalingSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("no held-out samples".into()));
        }
        Ok(samples
            .iter()
            .map(|s| (self.predict(s.data_scale, s.machines) - s.time_ms).abs() / s.time_ms)
            .sum::<f64>()
            / samples.len() as f64)
    }
}

/// Hard limits a testbed must respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceConstraint {
    pub max_machines: u32,
    pub max_data_scale: f64,
}

/// Everything [`plan_testbeds`] needs besides the target itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerOptions {
    /// Planning time budget (same unit the target reports).
    pub time_budget_ms: f64,
    /// Desired testbed-to-production time ratio, in (0, 1].
    pub scale_factor: f64,
    /// Relative half-width of the acceptance band around `t0 * f`.
    pub tolerance: f64,
    /// Samples acquired per planning round.
    pub batch_size: usize,
    pub resource: ResourceConstraint,
    /// Machine counts eligible for sampling and for the returned plan.
    pub machine_grid: Vec<u32>,
    /// Data-scale fractions eligible for sampling and for the plan.
    pub data_scale_grid: Vec<f64>,
    /// How many predictions the fitted model is expected to serve (the S
    /// in the sample-size cost 2n + e(n)*S*R).
    pub prediction_set_size: usize,
    /// Cost of one prediction relative to one measurement (the R above).
    pub cost_ratio: f64,
    /// Upper limit for the projected optimal sample size scan.
    pub max_training_size: usize,
    /// Production machine count (production data scale is 1).
    pub production_machines: u32,
}

impl PlannerOptions {
    /// Defaults: tolerance 20%, batches of 5, machine grid 1..=production,
    /// data-scale ladder 1/32..1, S=100, R=1.
    pub fn new(time_budget_ms: f64, scale_factor: f64, production_machines: u32) -> Self {
        PlannerOptions {
            time_budget_ms,
            scale_factor,
            tolerance: 0.2,
            batch_size: 5,
            resource: ResourceConstraint {
                max_machines: production_machines,
                max_data_scale: 1.0,
            },
            machine_grid: (1..=production_machines).collect(),
            data_scale_grid: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0],
            prediction_set_size: 100,
            cost_ratio: 1.0,
            max_training_size: 200,
            production_machines,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.time_budget_ms.is_finite() && self.time_budget_ms > 0.0) {
            return Err(Error::InvalidInput("time budget must be positive".into()));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 1.0) {
            return Err(Error::InvalidInput("scale factor must lie in (0, 1]".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be at least 1".into()));
        }
        if self.machine_grid.is_empty() || self.data_scale_grid.is_empty() {
            return Err(Error::InvalidInput("sampling grids must be non-empty".into()));
        }
        if self.machine_grid.iter().any(|&nm| nm == 0) {
            return Err(Error::InvalidInput("machine grid entries must be at least 1".into()));
        }
        if self.data_scale_grid.iter().any(|&ds| !(ds > 0.0 && ds <= 1.0)) {
            return Err(Error::InvalidInput("data-scale grid entries must lie in (0, 1]".into()));
        }
        if self.resource.max_machines == 0
            || !(self.resource.max_data_scale > 0.0 && self.resource.max_data_scale <= 1.0)
        {
            return Err(Error::InvalidInput("resource constraint out of range".into()));
        }
        if !(self.cost_ratio.is_finite() && self.cost_ratio >= 0.0) {
            return Err(Error::InvalidInput("cost ratio must be non-negative".into()));
        }
        if self.max_training_size == 0 {
            return Err(Error::InvalidInput("max training size must be at least 1".into()));
        }
        if self.production_machines == 0 {
            return Err(Error::InvalidInput("production machine count must be at least 1".into()));
        }
        Ok(())
    }
}

/// A (data scale, machines) setting whose predicted time lands in the
/// acceptance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestbedSetting {
    pub data_scale: f64,
    pub machines: u32,
    pub predicted_ms: f64,
    /// Signed relative deviation of `predicted_ms` from `t0 * f`.
    pub deviation: f64,
}

/// Full outcome of a planning pass.
#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    /// Qualifying settings ranked by |predicted − t0·f| ascending.
    pub settings: Vec<TestbedSetting>,
    pub model: Option<ScalingModel>,
    pub samples: Vec<ScalingSample>,
    pub curve_points: Vec<LearningCurvePoint>,
    pub family: Option<FamilySelection>,
    /// Projected cost-optimal training-set size.
    pub optimal_sample_size: Option<usize>,
    /// The full-scale default-configuration anchor time t0.
    pub default_production_ms: Option<f64>,
    pub spent_ms: f64,
    pub notes: Vec<String>,
    /// Every measurement the planner charged, as a replayable log.
    #[serde(skip_serializing)]
    pub log: TrialLog,
}

impl PlanReport {
    /// The documented default choice among qualifiers: keep the machine
    /// count as close to production as possible (realistic parallelism),
    /// then take the cheapest data scale.
    pub fn recommended(&self) -> Option<&TestbedSetting> {
        self.settings.iter().max_by(|a, b| {
            a.machines.cmp(&b.machines).then(b.data_scale.total_cmp(&a.data_scale))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }
}

/// Run the planning pass against `system`, measuring `default_config`.
///
/// Every execution is charged against `options.time_budget_ms`; the total
/// never exceeds the budget by more than one in-flight run. On a budget
/// too small to produce a model and a full-scale anchor, the report comes
/// back with no settings and a diagnostic note rather than an error.
pub fn plan_testbeds(
    system: &dyn TargetSystem,
    space: &ConfigurationSpace,
    default_config: &Configuration,
    options: &PlannerOptions,
    seed: u64,
) -> Result<PlanReport> {
    options.check()?;
    let violations = space.validate(default_config)?;
    if let Some(v) = violations.first() {
        return Err(Error::InvalidInput(format!("{}: {}", v.parameter, v.message)));
    }

    // Sampling pool: the constrained grid in a seed-shuffled order.
    let mut pool: Vec<(f64, u32)> = Vec::new();
    for &nm in &options.machine_grid {
        for &ds in &options.data_scale_grid {
            if nm <= options.resource.max_machines && ds <= options.resource.max_data_scale {
                pool.push((ds, nm));
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::InvalidInput(
            "no grid point satisfies the resource constraint".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, Purpose::Sampling, 0));
    pool.shuffle(&mut rng);

    let budget = options.time_budget_ms;
    let mut samples: Vec<ScalingSample> = Vec::new();
    let mut curve_points: Vec<LearningCurvePoint> = Vec::new();
    let mut records: Vec<TrialRecord> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut spent = 0.0f64;
    let mut cursor = 0usize; // position in the (cycled) pool
    let mut model: Option<ScalingModel> = None;

    // Keep enough budget in reserve for the full-scale anchor run, using
    // the current model's own estimate of it once one exists.
    let anchor_reserve = |model: &Option<ScalingModel>| -> f64 {
        model.as_ref().map_or(0.0, |m| m.predict(1.0, options.production_machines))
    };

    // Acquire up to `count` measurements; execution is speculative and
    // parallel, but results commit in submission order under the budget
    // cap, so the trajectory is identical at any dispatch width.
    let acquire = |count: usize,
                   cursor: &mut usize,
                   spent: &mut f64,
                   samples: &mut Vec<ScalingSample>,
                   records: &mut Vec<TrialRecord>,
                   cap: f64|
     -> Result<usize> {
        let base = records.len() as u64;
        let requests: Vec<(usize, (f64, u32), u64)> = (0..count)
            .map(|j| {
                let point = pool[(*cursor + j) % pool.len()];
                (j, point, sub_seed(seed, Purpose::Execution, base + j as u64))
            })
            .collect();
        let outcomes = par::map_collect(&requests, |(_, (ds, nm), run_seed)| {
            system.execute(default_config, *ds, *nm, *run_seed)
        });
        let mut committed = 0usize;
        for ((_, (ds, nm), run_seed), outcome) in requests.iter().zip(outcomes) {
            if *spent >= cap {
                break; // discard the speculative remainder
            }
            let time = outcome?;
            *spent += time;
            records.push(TrialRecord {
                index: records.len(),
                phase: Phase::Plan,
                platform: Platform::Testbed,
                iteration: 0,
                config: default_config.values().to_vec(),
                data_scale: *ds,
                machines: *nm,
                time_ms: time,
                charged_ms: time,
                seed: *run_seed,
                elapsed_ms: *spent,
            });
            samples.push(ScalingSample { data_scale: *ds, machines: *nm, time_ms: time });
            committed += 1;
        }
        *cursor += committed;
        Ok(committed)
    };

    // Alternating 50/50 split: even acquisition indices train, odd test.
    let split = |samples: &[ScalingSample]| -> (Vec<ScalingSample>, Vec<ScalingSample>) {
        let train = samples.iter().copied().step_by(2).collect();
        let test = samples.iter().skip(1).copied().step_by(2).collect();
        (train, test)
    };

    // Main loop: acquire a batch, refit, extend the learning curve; stop
    // once the curve is clearly decreasing or the budget is spent.
    loop {
        let cap = (budget - anchor_reserve(&model)).min(budget);
        let got = acquire(options.batch_size, &mut cursor, &mut spent, &mut samples, &mut records, cap)?;
        if got == 0 {
            notes.push("budget exhausted during sampling".into());
            break;
        }
        let (train, test) = split(&samples);
        match ScalingModel::fit(&train) {
            Ok(m) => {
                if !test.is_empty() {
                    let n = train.len();
                    let error_rate = m.mape(&test)?;
                    if curve_points.last().map_or(true, |p| p.n < n) {
                        curve_points.push(LearningCurvePoint { n, error_rate });
                    }
                }
                model = Some(m);
            }
            Err(e) => notes.push(format!("round with {} samples: {e}", samples.len())),
        }
        if curve_points.len() >= 3 {
            let selection = select_family(&curve_points)?;
            if selection.best_correlation < 0.0 {
                break; // error is clearly shrinking; time to project
            }
        }
        if spent >= (budget - anchor_reserve(&model)).min(budget) {
            notes.push("budget exhausted during sampling".into());
            break;
        }
        if system.is_deterministic() && cursor >= pool.len() {
            notes.push("sampling pool exhausted (deterministic target; repeats add nothing)".into());
            break;
        }
    }

    // Project the curve to the cost-optimal sample size and top up.
    let mut family: Option<FamilySelection> = None;
    let mut optimal_sample_size: Option<usize> = None;
    if curve_points.len() >= 3 {
        let selection = select_family(&curve_points)?;
        let n_cap = options.max_training_size.max(curve_points.last().unwrap().n);
        let n_star = optimal_n(
            &selection.best,
            options.prediction_set_size,
            options.cost_ratio,
            n_cap,
        );
        optimal_sample_size = Some(n_star);
        family = Some(selection);
        while samples.len() < 2 * n_star {
            if system.is_deterministic() && cursor >= pool.len() {
                break;
            }
            let cap = (budget - anchor_reserve(&model)).min(budget);
            if spent >= cap
                || acquire(1, &mut cursor, &mut spent, &mut samples, &mut records, cap)? == 0
            {
                notes.push(format!(
                    "top-up stopped at {} of {} samples (budget)",
                    samples.len(),
                    2 * n_star
                ));
                break;
            }
        }
    } else {
        notes.push("learning curve too short to project an optimal sample size".into());
    }

    // Final model over everything measured.
    match ScalingModel::fit(&samples) {
        Ok(m) => model = Some(m),
        Err(e) => {
            notes.push(format!("final fit failed: {e}"));
            model = None;
        }
    }

    // Full-scale anchor: the default configuration at production scale.
    let mut t0: Option<f64> = None;
    if model.is_some() {
        if spent < budget {
            let run_seed = sub_seed(seed, Purpose::Execution, records.len() as u64);
            let time =
                system.execute(default_config, 1.0, options.production_machines, run_seed)?;
            spent += time;
            records.push(TrialRecord {
                index: records.len(),
                phase: Phase::Plan,
                platform: Platform::Production,
                iteration: 0,
                config: default_config.values().to_vec(),
                data_scale: 1.0,
                machines: options.production_machines,
                time_ms: time,
                charged_ms: time,
                seed: run_seed,
                elapsed_ms: spent,
            });
            t0 = Some(time);
        } else {
            notes.push("budget exhausted before the full-scale anchor run".into());
        }
    }

    // Qualify grid settings against the band around t0 * f.
    let mut settings: Vec<TestbedSetting> = Vec::new();
    if let (Some(m), Some(t0)) = (&model, t0) {
        let target = t0 * options.scale_factor;
        for &nm in &options.machine_grid {
            for &ds in &options.data_scale_grid {
                if nm > options.resource.max_machines || ds > options.resource.max_data_scale {
                    continue;
                }
                let predicted = m.predict(ds, nm);
                let deviation = predicted / target - 1.0;
                if deviation.abs() <= options.tolerance {
                    settings.push(TestbedSetting {
                        data_scale: ds,
                        machines: nm,
                        predicted_ms: predicted,
                        deviation,
                    });
                }
            }
        }
        settings.sort_by(|a, b| {
            (a.predicted_ms - target)
                .abs()
                .total_cmp(&(b.predicted_ms - target).abs())
                .then(b.machines.cmp(&a.machines))
                .then(a.data_scale.total_cmp(&b.data_scale))
        });
        if settings.is_empty() {
            notes.push("no grid setting lands in the acceptance band".into());
        }
    } else if model.is_none() {
        notes.push("no scaling model could be fitted within the budget".into());
    }

    Ok(PlanReport {
        settings,
        model,
        samples,
        curve_points,
        family,
        optimal_sample_size,
        default_production_ms: t0,
        spent_ms: spent,
        notes,
        log: TrialLog {
            header: LogHeader::new(space, "plan-testbed", seed),
            records,
            truncated: false,
        },
    })
}
