//! Target systems: the things being tuned.
//!
//! A [`TargetSystem`] maps (configuration, data scale, machine count, seed)
//! to an execution time. Three implementations live here:
//!
//! * [`Simulator`] — a synthetic response surface with a known optimum,
//!   controllable low-fidelity bias, and optional log-normal noise. Used
//!   for tests, benchmarks, and end-to-end demos.
//! * [`ReplayTarget`] — answers executions from a previously recorded
//!   trial log; a request that was never recorded is a hard error.
//!
//! The synthetic surface's execution time factors as
//! `scaling(ds, nm) * quality(config, ds) * noise`, where scaling is the
//! same four-term model the testbed planner fits, and quality blends the
//! true response with a decoy response as the data scale shrinks — small
//! subsets of real workloads reward different configurations than the
//! full dataset does, and the blend reproduces that hazard.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::seed::{sub_seed, Purpose};
use crate::space::{Configuration, ConfigurationSpace, Domain, Value};
use crate::trial::{Platform, TrialLog};

/// Anything that can execute a configuration and report a time.
///
/// `Sync` is part of the contract: the tuner may probe candidates from
/// worker threads (results are still committed in a fixed order).
pub trait TargetSystem: Sync {
    /// Execute `config` on `machines` machines over a `data_scale`
    /// fraction of the dataset; `seed` drives any measurement noise.
    fn execute(&self, config: &Configuration, data_scale: f64, machines: u32, seed: u64)
        -> Result<f64>;

    /// True when equal arguments always produce equal times (noise-free);
    /// lets callers reuse a memoized measurement without re-charging it.
    fn is_deterministic(&self) -> bool;

    fn name(&self) -> &str;
}

/// A target pinned to one (data scale, machine count) operating point,
/// e.g. "the testbed" or "the production system".
#[derive(Clone, Copy)]
pub struct ScaledTarget<'a> {
    pub system: &'a dyn TargetSystem,
    pub data_scale: f64,
    pub machines: u32,
}

impl<'a> ScaledTarget<'a> {
    pub fn new(system: &'a dyn TargetSystem, data_scale: f64, machines: u32) -> Self {
        ScaledTarget { system, data_scale, machines }
    }

    pub fn run(&self, config: &Configuration, seed: u64) -> Result<f64> {
        self.system.execute(config, self.data_scale, self.machines, seed)
    }
}

/// Effect of one parameter on the synthetic quality surface, in encoded
/// coordinates normalized to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimEffect {
    /// `weight * (z - optimum)^2` for numeric parameters.
    Quadratic { weight: f64, optimum: f64 },
    /// Additive penalty per level for boolean/categorical parameters.
    Offsets { values: Vec<f64> },
}

/// Bilinear coupling `strength * (z_a - u_a) * (z_b - u_b)` between two
/// quadratic dimensions (centered at their optima so the analytic optimum
/// is unaffected).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
}

/// What runs on the target: a program over a dataset of a given size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub program: String,
    /// Dataset size in bytes (or records — any positive unit, used only
    /// for reporting and for deriving data-scale fractions).
    pub dataset_size: u64,
}

impl WorkloadSpec {
    pub fn check(&self) -> Result<()> {
        if self.dataset_size == 0 {
            return Err(Error::InvalidInput("dataset size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-machine hardware description plus cluster size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub cores: u32,
    pub cpu_ghz: f64,
    pub memory_gb: f64,
    pub disk_gb: f64,
    pub network_gbps: f64,
    pub machines: u32,
}

impl EnvironmentSpec {
    pub fn check(&self) -> Result<()> {
        let positive = self.cores > 0
            && self.cpu_ghz > 0.0
            && self.memory_gb > 0.0
            && self.disk_gb > 0.0
            && self.network_gbps > 0.0
            && self.machines > 0;
        if !positive {
            return Err(Error::InvalidInput("environment fields must all be positive".into()));
        }
        Ok(())
    }
}

fn default_surface_name() -> String {
    "synthetic".into()
}

/// Declarative description of a synthetic target, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSurface {
    #[serde(default = "default_surface_name")]
    pub name: String,
    /// Quality floor at the optimum; must be positive.
    pub base_floor: f64,
    /// One effect per parameter, in space order.
    pub dims: Vec<DimEffect>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
    /// Coefficients of the execution-time scaling model:
    /// `t = c0 + c1*(ds/nm) + c2*ln(nm) + c3*nm`.
    pub scaling: [f64; 4],
    /// Fidelity in [0, 1]: how faithfully subsets rank configurations.
    /// 1 means subsets rank exactly like the full dataset.
    pub fidelity: f64,
    /// Log-normal noise scale (sigma); 0 makes the target deterministic.
    pub noise: f64,
    /// Seed for the decoy surface that dominates at tiny data scales.
    pub decoy_seed: u64,
    /// Optional description of what the surface stands in for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
}

impl SyntheticSurface {
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A [`SyntheticSurface`] bound to a configuration space, ready to run.
pub struct Simulator {
    space: ConfigurationSpace,
    surface: SyntheticSurface,
    /// Decoy counterpart of `surface.dims`, generated from `decoy_seed`.
    decoy_dims: Vec<DimEffect>,
}

impl Simulator {
    pub fn new(space: ConfigurationSpace, surface: SyntheticSurface) -> Result<Self> {
        if surface.dims.len() != space.dimension() {
            return Err(Error::DimensionMismatch {
                expected: space.dimension(),
                got: surface.dims.len(),
            });
        }
        if !(surface.base_floor.is_finite() && surface.base_floor > 0.0) {
            return Err(Error::InvalidInput("base floor must be positive".into()));
        }
        if !(0.0..=1.0).contains(&surface.fidelity) {
            return Err(Error::InvalidInput("fidelity must lie in [0, 1]".into()));
        }
        if !(surface.noise.is_finite() && surface.noise >= 0.0) {
            return Err(Error::InvalidInput("noise scale must be non-negative".into()));
        }
        if surface.scaling.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInput("scaling coefficients must be non-negative".into()));
        }
        if let Some(w) = &surface.workload {
            w.check()?;
        }
        if let Some(e) = &surface.environment {
            e.check()?;
        }
        for (i, (effect, spec)) in surface.dims.iter().zip(space.parameters()).enumerate() {
            match (effect, &spec.domain) {
                (DimEffect::Quadratic { weight, optimum }, Domain::Real { .. })
                | (DimEffect::Quadratic { weight, optimum }, Domain::Integer { .. }) => {
                    if !(weight.is_finite() && *weight >= 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "dim {i}: quadratic weight must be non-negative"
                        )));
                    }
                    if !(0.0..=1.0).contains(optimum) {
                        return Err(Error::InvalidInput(format!(
                            "dim {i}: optimum must lie in [0, 1]"
                        )));
                    }
                }
                (DimEffect::Offsets { values }, Domain::Boolean) => {
                    if values.len() != 2 {
                        return Err(Error::InvalidInput(format!(
                            "dim {i}: boolean parameter needs exactly 2 offsets"
                        )));
                    }
                }
                (DimEffect::Offsets { values }, Domain::Categorical { categories }) => {
                    if values.len() != categories.len() {
                        return Err(Error::InvalidInput(format!(
                            "dim {i}: {} offsets for {} categories",
                            values.len(),
                            categories.len()
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "dim {i}: effect kind does not match the parameter domain"
                    )));
                }
            }
            if let DimEffect::Offsets { values } = effect {
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "dim {i}: offsets must be non-negative"
                    )));
                }
            }
        }
        // Interactions must couple quadratic dims and stay weak enough that
        // the quadratic form is positive semidefinite (diagonal dominance:
        // w_i >= sum_j |s_ij| / 2), so quality never dips below the floor
        // and the declared optimum really is optimal.
        let mut coupling = vec![0.0f64; surface.dims.len()];
        for (k, it) in surface.interactions.iter().enumerate() {
            if it.a >= surface.dims.len() || it.b >= surface.dims.len() || it.a == it.b {
                return Err(Error::InvalidInput(format!("interaction {k}: bad dim pair")));
            }
            if !it.strength.is_finite() {
                return Err(Error::InvalidInput(format!("interaction {k}: non-finite strength")));
            }
            for d in [it.a, it.b] {
                if !matches!(surface.dims[d], DimEffect::Quadratic { .. }) {
                    return Err(Error::InvalidInput(format!(
                        "interaction {k}: dim {d} is not quadratic"
                    )));
                }
                coupling[d] += it.strength.abs();
            }
        }
        for (i, effect) in surface.dims.iter().enumerate() {
            if let DimEffect::Quadratic { weight, .. } = effect {
                if coupling[i] > 0.0 && *weight < coupling[i] / 2.0 {
                    return Err(Error::InvalidInput(format!(
                        "dim {i}: weight {} too small for interaction strength {} (needs >= {})",
                        weight,
                        coupling[i],
                        coupling[i] / 2.0
                    )));
                }
            }
        }

        let decoy_dims = Self::generate_decoy(&space, surface.decoy_seed);
        Ok(Simulator { space, surface, decoy_dims })
    }

    pub fn from_path(
        space: ConfigurationSpace,
        path: impl AsRef<std::path::Path>,
    ) -> Result<Self> {
        Simulator::new(space, SyntheticSurface::from_path(path)?)
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn surface(&self) -> &SyntheticSurface {
        &self.surface
    }

    /// The decoy surface: same shape as the true one, different optima.
    /// At tiny data scales it dominates what the target rewards.
    fn generate_decoy(space: &ConfigurationSpace, decoy_seed: u64) -> Vec<DimEffect> {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(decoy_seed, Purpose::Decoy, 0));
        space
            .parameters()
            .iter()
            .map(|spec| match &spec.domain {
                Domain::Real { .. } | Domain::Integer { .. } => DimEffect::Quadratic {
                    weight: rng.random_range(0.1..0.5),
                    optimum: rng.random::<f64>(),
                },
                Domain::Boolean => {
                    DimEffect::Offsets { values: (0..2).map(|_| rng.random_range(0.0..0.15)).collect() }
                }
                Domain::Categorical { categories } => DimEffect::Offsets {
                    values: (0..categories.len()).map(|_| rng.random_range(0.0..0.15)).collect(),
                },
            })
            .collect()
    }

    /// Normalize encoded coordinates to [0, 1] per dimension.
    fn normalized(&self, config: &Configuration) -> Result<Vec<f64>> {
        let encoded = self.space.encode(config)?;
        Ok(encoded
            .iter()
            .zip(self.space.parameters())
            .map(|(&e, spec)| {
                let (lo, hi) = spec.encoded_interval();
                (e - lo) / (hi - lo)
            })
            .collect())
    }

    fn response(&self, z: &[f64], config: &Configuration, dims: &[DimEffect]) -> f64 {
        let mut total = self.surface.base_floor;
        let mut centered = vec![0.0f64; z.len()];
        for (i, effect) in dims.iter().enumerate() {
            match effect {
                DimEffect::Quadratic { weight, optimum } => {
                    centered[i] = z[i] - optimum;
                    total += weight * centered[i] * centered[i];
                }
                DimEffect::Offsets { values } => {
                    let level = match &config.values()[i] {
                        Value::Bool(b) => usize::from(*b),
                        Value::Text(_) | Value::Int(_) | Value::Real(_) => {
                            // Encoded coordinate is the level index.
                            (z[i] * values.len() as f64).floor() as usize
                        }
                    };
                    total += values[level.min(values.len() - 1)];
                }
            }
        }
        for it in &self.surface.interactions {
            total += it.strength * centered[it.a] * centered[it.b];
        }
        total
    }

    /// Noise-free quality at a given data scale: the decoy's share of the
    /// blend grows as the subset shrinks and as fidelity drops.
    pub fn quality(&self, config: &Configuration, data_scale: f64) -> Result<f64> {
        let z = self.normalized(config)?;
        let truth = self.response(&z, config, &self.surface.dims);
        let decoy = self.response(&z, config, &self.decoy_dims);
        let decoy_share = (1.0 - self.surface.fidelity) * (1.0 - data_scale);
        Ok((1.0 - decoy_share) * truth + decoy_share * decoy)
    }

    /// The execution-time scaling factor at an operating point.
    pub fn scaling_time(&self, data_scale: f64, machines: u32) -> f64 {
        let [c0, c1, c2, c3] = self.surface.scaling;
        let nm = machines as f64;
        c0 + c1 * (data_scale / nm) + c2 * nm.ln() + c3 * nm
    }

    /// The configuration that minimizes the full-scale response (up to
    /// integer rounding of quadratic optima).
    pub fn optimal_configuration(&self) -> Configuration {
        let values = self
            .surface
            .dims
            .iter()
            .zip(self.space.parameters())
            .map(|(effect, spec)| match effect {
                DimEffect::Quadratic { optimum, .. } => {
                    let (lo, hi) = spec.encoded_interval();
                    spec.decode_value(lo + optimum * (hi - lo)).expect("in-range")
                }
                DimEffect::Offsets { values } => {
                    let best = values
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    match &spec.domain {
                        Domain::Boolean => Value::Bool(best == 1),
                        Domain::Categorical { categories } => Value::Text(categories[best].clone()),
                        _ => unreachable!("offsets only attach to discrete domains"),
                    }
                }
            })
            .collect();
        Configuration::new(values)
    }
}

impl TargetSystem for Simulator {
    fn execute(
        &self,
        config: &Configuration,
        data_scale: f64,
        machines: u32,
        seed: u64,
    ) -> Result<f64> {
        if !(data_scale > 0.0 && data_scale <= 1.0) {
            return Err(Error::InvalidInput(format!("data scale {data_scale} outside (0, 1]")));
        }
        if machines == 0 {
            return Err(Error::InvalidInput("machine count must be at least 1".into()));
        }
        let violations = self.space.validate(config)?;
        if let Some(v) = violations.first() {
            return Err(Error::InvalidInput(format!("{}: {}", v.parameter, v.message)));
        }
        let quality = self.quality(config, data_scale)?;
        let noise = if self.surface.noise == 0.0 {
            1.0
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, Purpose::Execution, 0));
            let standard: f64 = StandardNormal.sample(&mut rng);
            // Mean-one log-normal: E[exp(sigma Z - sigma^2/2)] = 1.
            (self.surface.noise * standard - self.surface.noise * self.surface.noise / 2.0).exp()
        };
        Ok(self.scaling_time(data_scale, machines) * quality * noise)
    }

    fn is_deterministic(&self) -> bool {
        self.surface.noise == 0.0
    }

    fn name(&self) -> &str {
        &self.surface.name
    }
}

/// Mean and spread of a repeated measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMeasurement {
    pub mean_ms: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub std_dev_ms: f64,
    pub repetitions: usize,
}

/// Measure `config` `repetitions` times with independent per-repetition
/// seeds and summarize the runs.
pub fn repeat_and_average(
    target: &ScaledTarget,
    config: &Configuration,
    base_seed: u64,
    repetitions: usize,
) -> Result<RepeatedMeasurement> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("need at least one repetition".into()));
    }
    let times: Vec<f64> = (0..repetitions)
        .map(|r| target.run(config, sub_seed(base_seed, Purpose::Repetition, r as u64)))
        .collect::<Result<_>>()?;
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let std_dev = if times.len() < 2 {
        0.0
    } else {
        let var =
            times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (times.len() - 1) as f64;
        var.sqrt()
    };
    Ok(RepeatedMeasurement { mean_ms: mean, std_dev_ms: std_dev, repetitions })
}

type ReplayKey = (String, u64, u32);

/// Serves executions out of a recorded trial log.
///
/// Requests are matched by exact (configuration, data scale, machines);
/// repeated identical requests consume the log's occurrences in order and
/// then stick at the last one. A request with no recorded occurrence at
/// all fails with [`Error::ReplayMiss`] — replays never invent data.
///
/// Whether the replay reports itself deterministic is inferred from the
/// log: if any configuration was measured twice with different times, the
/// recorded system was noisy, and the replay must claim the same so that
/// the executor charges repeats exactly as the original run did. Claiming
/// determinism over a noisy log would let the memoizer zero-charge
/// repeats the original paid for, and the replayed search would drift off
/// the recorded path.
pub struct ReplayTarget {
    name: String,
    runs: Mutex<HashMap<ReplayKey, ReplayQueue>>,
    deterministic: bool,
}

struct ReplayQueue {
    times: Vec<f64>,
    next: usize,
}

fn replay_key(config: &Configuration, data_scale: f64, machines: u32) -> ReplayKey {
    let values = serde_json::to_string(config.values()).expect("values serialize");
    (values, data_scale.to_bits(), machines)
}

impl ReplayTarget {
    /// Index every record of `log` (all platforms) for replay.
    pub fn from_log(log: &TrialLog) -> Self {
        let mut runs: HashMap<ReplayKey, ReplayQueue> = HashMap::new();
        for r in &log.records {
            let key = replay_key(&Configuration::new(r.config.clone()), r.data_scale, r.machines);
            runs.entry(key).or_insert_with(|| ReplayQueue { times: Vec::new(), next: 0 }).times.push(r.time_ms);
        }
        let deterministic = runs
            .values()
            .all(|q| q.times.iter().all(|t| t.to_bits() == q.times[0].to_bits()));
        ReplayTarget {
            name: format!("replay of {}", log.header.space),
            runs: Mutex::new(runs),
            deterministic,
        }
    }

    /// Restrict a log to one platform before indexing (useful when testbed
    /// and production used the same operating point).
    pub fn from_log_platform(log: &TrialLog, platform: Platform) -> Self {
        let filtered = TrialLog {
            header: log.header.clone(),
            records: log.records.iter().filter(|r| r.platform == platform).cloned().collect(),
            truncated: log.truncated,
        };
        ReplayTarget::from_log(&filtered)
    }
}

impl TargetSystem for ReplayTarget {
    fn execute(
        &self,
        config: &Configuration,
        data_scale: f64,
        machines: u32,
        _seed: u64,
    ) -> Result<f64> {
        let key = replay_key(config, data_scale, machines);
        let mut runs = self.runs.lock().expect("replay lock");
        match runs.get_mut(&key) {
            None => Err(Error::ReplayMiss { data_scale, machines }),
            Some(queue) => {
                let at = queue.next.min(queue.times.len() - 1);
                if queue.next < queue.times.len() {
                    queue.next += 1;
                }
                Ok(queue.times[at])
            }
        }
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ParameterSpec;
    use crate::trial::{LogHeader, Phase, TrialRecord};

    fn demo_space() -> ConfigurationSpace {
        ConfigurationSpace::new(
            "demo",
            vec![
                ParameterSpec {
                    name: "level".into(),
                    domain: Domain::Real { lower: 0.0, upper: 1.0 },
                    default: Value::Real(0.5),
                },
                ParameterSpec {
                    name: "compress".into(),
                    domain: Domain::Boolean,
                    default: Value::Bool(false),
                },
            ],
        )
        .unwrap()
    }

    fn demo_surface() -> SyntheticSurface {
        SyntheticSurface {
            name: "demo".into(),
            base_floor: 1.0,
            dims: vec![
                DimEffect::Quadratic { weight: 2.0, optimum: 0.25 },
                DimEffect::Offsets { values: vec![0.12, 0.0] },
            ],
            interactions: vec![],
            scaling: [0.3, 800.0, 0.3, 0.08],
            fidelity: 1.0,
            noise: 0.0,
            decoy_seed: 9,
            workload: None,
            environment: None,
        }
    }

    #[test]
    fn scaling_matches_hand_computation() {
        let sim = Simulator::new(demo_space(), demo_surface()).unwrap();
        // 0.3 + 800*(1/5) + 0.3*ln 5 + 0.08*5 at full data on 5 machines.
        let expected = 0.3 + 160.0 + 0.3 * 5.0f64.ln() + 0.4;
        assert!((sim.scaling_time(1.0, 5) - expected).abs() < 1e-12);
        // Quality at the optimum is exactly the floor.
        let best = Configuration::new(vec![Value::Real(0.25), Value::Bool(true)]);
        assert!((sim.quality(&best, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let time = sim.execute(&best, 1.0, 5, 0).unwrap();
        assert!((time - expected).abs() < 1e-9);
    }

    #[test]
    fn quadratic_and_offset_effects_add_up() {
        let sim = Simulator::new(demo_space(), demo_surface()).unwrap();
        // z = 0.75 is 0.5 from the optimum: 1 + 2*0.25 = 1.5; false adds 0.12.
        let config = Configuration::new(vec![Value::Real(0.75), Value::Bool(false)]);
        assert!((sim.quality(&config, 1.0).unwrap() - 1.62).abs() < 1e-12);
    }

    #[test]
    fn full_data_ignores_fidelity_and_decoy() {
        let mut surface = demo_surface();
        surface.fidelity = 0.2; // very misleading subsets
        let sim = Simulator::new(demo_space(), surface).unwrap();
        let config = Configuration::new(vec![Value::Real(0.75), Value::Bool(false)]);
        // decoy share = (1 - 0.2) * (1 - ds); zero at ds = 1.
        assert!((sim.quality(&config, 1.0).unwrap() - 1.62).abs() < 1e-12);
        // At ds < 1 the decoy pulls the response away from the true value.
        let q_small = sim.quality(&config, 1.0 / 32.0).unwrap();
        assert!((q_small - 1.62).abs() > 1e-6);
    }

    #[test]
    fn noise_is_seeded_and_mean_preserving() {
        let mut surface = demo_surface();
        surface.noise = 0.3;
        let sim = Simulator::new(demo_space(), surface).unwrap();
        assert!(!sim.is_deterministic());
        let config = Configuration::new(vec![Value::Real(0.5), Value::Bool(true)]);
        let a = sim.execute(&config, 1.0, 5, 11).unwrap();
        let b = sim.execute(&config, 1.0, 5, 11).unwrap();
        let c = sim.execute(&config, 1.0, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Mean over many seeds approaches the noise-free time (log-normal
        // with mean 1), well within 3 standard errors for sigma = 0.3.
        let clean = sim.quality(&config, 1.0).unwrap() * sim.scaling_time(1.0, 5);
        let n = 4000;
        let mean: f64 = (0..n)
            .map(|s| sim.execute(&config, 1.0, 5, s as u64).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean / clean - 1.0).abs() < 0.02, "mean ratio {}", mean / clean);
    }

    #[test]
    fn optimal_configuration_beats_samples() {
        let sim = Simulator::new(demo_space(), demo_surface()).unwrap();
        let best = sim.optimal_configuration();
        assert_eq!(best.values(), &[Value::Real(0.25), Value::Bool(true)]);
        let t_best = sim.execute(&best, 1.0, 5, 0).unwrap();
        for config in crate::doe::lhs(sim.space(), 20, 5).unwrap() {
            assert!(sim.execute(&config, 1.0, 5, 0).unwrap() >= t_best - 1e-9);
        }
    }

    #[test]
    fn validation_rejects_bad_surfaces() {
        let space = demo_space();
        let mut s = demo_surface();
        s.dims = vec![DimEffect::Quadratic { weight: 1.0, optimum: 0.5 }];
        assert!(Simulator::new(space.clone(), s).is_err()); // wrong dim count

        let mut s = demo_surface();
        s.dims[1] = DimEffect::Quadratic { weight: 1.0, optimum: 0.5 };
        assert!(Simulator::new(space.clone(), s).is_err()); // kind mismatch

        let mut s = demo_surface();
        s.fidelity = 1.5;
        assert!(Simulator::new(space.clone(), s).is_err());

        let mut s = demo_surface();
        s.interactions = vec![Interaction { a: 0, b: 1, strength: 0.5 }];
        assert!(Simulator::new(space.clone(), s).is_err()); // dim 1 not quadratic

        // An interaction stronger than the quadratic weights allow.
        let wide = ConfigurationSpace::new(
            "wide",
            vec![
                ParameterSpec {
                    name: "p".into(),
                    domain: Domain::Real { lower: 0.0, upper: 1.0 },
                    default: Value::Real(0.5),
                },
                ParameterSpec {
                    name: "q".into(),
                    domain: Domain::Real { lower: 0.0, upper: 1.0 },
                    default: Value::Real(0.5),
                },
            ],
        )
        .unwrap();
        let s = SyntheticSurface {
            name: "overcoupled".into(),
            base_floor: 1.0,
            dims: vec![
                DimEffect::Quadratic { weight: 0.1, optimum: 0.5 },
                DimEffect::Quadratic { weight: 0.1, optimum: 0.5 },
            ],
            interactions: vec![Interaction { a: 0, b: 1, strength: 0.5 }],
            scaling: [1.0, 0.0, 0.0, 0.0],
            fidelity: 1.0,
            noise: 0.0,
            decoy_seed: 1,
            workload: None,
            environment: None,
        };
        assert!(Simulator::new(wide, s).is_err());
    }

    #[test]
    fn interactions_preserve_floor_positivity() {
        let space = ConfigurationSpace::new(
            "pair",
            vec![
                ParameterSpec {
                    name: "p".into(),
                    domain: Domain::Real { lower: 0.0, upper: 1.0 },
                    default: Value::Real(0.5),
                },
                ParameterSpec {
                    name: "q".into(),
                    domain: Domain::Real { lower: 0.0, upper: 1.0 },
                    default: Value::Real(0.5),
                },
            ],
        )
        .unwrap();
        let surface = SyntheticSurface {
            name: "coupled".into(),
            base_floor: 1.0,
            dims: vec![
                DimEffect::Quadratic { weight: 0.4, optimum: 0.2 },
                DimEffect::Quadratic { weight: 0.4, optimum: 0.8 },
            ],
            interactions: vec![Interaction { a: 0, b: 1, strength: -0.6 }],
            scaling: [1.0, 0.0, 0.0, 0.0],
            fidelity: 1.0,
            noise: 0.0,
            decoy_seed: 1,
            workload: None,
            environment: None,
        };
        let sim = Simulator::new(space, surface).unwrap();
        // Diagonal dominance holds (0.4 >= 0.6/2), so quality >= floor on a
        // corner sweep including the worst sign combinations.
        for &a in &[0.0, 0.2, 0.5, 1.0] {
            for &b in &[0.0, 0.5, 0.8, 1.0] {
                let c = Configuration::new(vec![Value::Real(a), Value::Real(b)]);
                assert!(sim.quality(&c, 1.0).unwrap() >= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn repeat_and_average_is_deterministic() {
        let mut surface = demo_surface();
        surface.noise = 0.2;
        let sim = Simulator::new(demo_space(), surface).unwrap();
        let target = ScaledTarget::new(&sim, 1.0, 5);
        let config = Configuration::new(vec![Value::Real(0.3), Value::Bool(true)]);
        let a = repeat_and_average(&target, &config, 99, 5).unwrap();
        let b = repeat_and_average(&target, &config, 99, 5).unwrap();
        assert_eq!(a, b);
        let single = repeat_and_average(&target, &config, 99, 1).unwrap();
        assert_ne!(a.mean_ms, single.mean_ms);
        // One repetition reports exactly that execution, spread 0.
        assert_eq!(single.mean_ms, target.run(&config, sub_seed(99, Purpose::Repetition, 0)).unwrap());
        assert_eq!(single.std_dev_ms, 0.0);
    }

    #[test]
    fn repeat_spread_tracks_the_noise_level() {
        // Noise-free: zero spread.
        let sim = Simulator::new(demo_space(), demo_surface()).unwrap();
        let target = ScaledTarget::new(&sim, 1.0, 5);
        let config = Configuration::new(vec![Value::Real(0.3), Value::Bool(true)]);
        let m = repeat_and_average(&target, &config, 4, 5).unwrap();
        assert_eq!(m.std_dev_ms, 0.0);

        // Log-normal sigma = 0.02: relative spread concentrates near 2%.
        let mut surface = demo_surface();
        surface.noise = 0.02;
        let sim = Simulator::new(demo_space(), surface).unwrap();
        let target = ScaledTarget::new(&sim, 1.0, 5);
        let mut rel = Vec::new();
        for s in 0..200 {
            let m = repeat_and_average(&target, &config, s, 5).unwrap();
            rel.push(m.std_dev_ms / m.mean_ms);
        }
        let mean_rel = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!((mean_rel - 0.02).abs() < 0.01, "mean relative spread {mean_rel}");
    }

    #[test]
    fn descriptor_specs_validate_positivity() {
        assert!(WorkloadSpec { program: "wordcount".into(), dataset_size: 1 }.check().is_ok());
        assert!(WorkloadSpec { program: "wordcount".into(), dataset_size: 0 }.check().is_err());
        let env = EnvironmentSpec {
            cores: 4,
            cpu_ghz: 2.5,
            memory_gb: 16.0,
            disk_gb: 500.0,
            network_gbps: 1.0,
            machines: 5,
        };
        assert!(env.check().is_ok());
        assert!(EnvironmentSpec { machines: 0, ..env }.check().is_err());
        assert!(EnvironmentSpec { cpu_ghz: 0.0, ..env }.check().is_err());
    }

    #[test]
    fn replay_serves_recorded_runs_and_rejects_unknown() {
        let space = demo_space();
        let config = vec![Value::Real(0.5), Value::Bool(true)];
        let make = |index: usize, time_ms: f64| TrialRecord {
            index,
            phase: Phase::Init,
            platform: Platform::Testbed,
            iteration: 0,
            config: config.clone(),
            data_scale: 0.25,
            machines: 3,
            time_ms,
            charged_ms: time_ms,
            seed: 0,
            elapsed_ms: 0.0,
        };
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 7),
            records: vec![make(0, 10.0), make(1, 12.0)],
            truncated: false,
        };
        let replay = ReplayTarget::from_log(&log);
        let c = Configuration::new(config);
        // Two recorded times for one key means the recorded system was
        // noisy, and the replay must admit it so repeats stay charged.
        assert!(!replay.is_deterministic());
        // Occurrences are consumed in order, then the last one sticks.
        assert_eq!(replay.execute(&c, 0.25, 3, 0).unwrap(), 10.0);
        assert_eq!(replay.execute(&c, 0.25, 3, 0).unwrap(), 12.0);
        assert_eq!(replay.execute(&c, 0.25, 3, 0).unwrap(), 12.0);
        // Unknown operating point: hard miss.
        match replay.execute(&c, 0.5, 3, 0) {
            Err(Error::ReplayMiss { data_scale, machines }) => {
                assert_eq!(data_scale, 0.5);
                assert_eq!(machines, 3);
            }
            other => panic!("expected replay miss, got {other:?}"),
        }
        // Identical repeats (what a memoizing run records) read as
        // deterministic, so the replayed executor memoizes them too.
        let quiet = TrialLog {
            header: log.header.clone(),
            records: log
                .records
                .iter()
                .map(|r| TrialRecord { time_ms: 10.0, ..r.clone() })
                .collect(),
            truncated: false,
        };
        assert!(ReplayTarget::from_log(&quiet).is_deterministic());
    }
}
