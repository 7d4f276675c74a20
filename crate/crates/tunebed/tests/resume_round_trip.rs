//! Resuming from a saved trial log must reproduce the original run exactly.
//!
//! The log round-trips through JSON on disk, so this exercises both the
//! serializer (every float must survive bit-exactly) and the resume path
//! (replayed records must match what the tuner would do from scratch).

use tunebed::space::ConfigurationSpace;
use tunebed::target::{ScaledTarget, Simulator, SyntheticSurface};
use tunebed::trial::TrialLog;
use tunebed::tuner::{run_tuner, tune, BudgetPolicy, TuneOptions};

fn load() -> (ConfigurationSpace, SyntheticSurface) {
    let raw = std::fs::read_to_string("../../data/spark.space.json").unwrap();
    let space: ConfigurationSpace = serde_json::from_str(&raw).unwrap();
    let raw = std::fs::read_to_string("../../data/demo.surface.json").unwrap();
    let surface: SyntheticSurface = serde_json::from_str(&raw).unwrap();
    (space, surface)
}

#[test]
fn resume_round_trip_on_bundled_surface() {
    let (space, surface) = load();
    let sim = Simulator::new(space.clone(), surface).unwrap();
    let testbed = ScaledTarget::new(&sim, 1.0 / 16.0, 5);
    let production = ScaledTarget::new(&sim, 1.0, 5);
    let policy = BudgetPolicy {
        total_ms: 4800.0,
        init_fraction: 0.4,
        search_fraction: 0.4,
        validation_fraction: 0.2,
        iterations: 12,
    };
    let outcome = tune(&testbed, &production, &space, &policy, 3).unwrap();

    // 1. Does the log survive a JSON save/load bit-exactly?
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.jsonl");
    outcome.log.save(&path).unwrap();
    let loaded = TrialLog::load(&path).unwrap();
    assert_eq!(outcome.log.records.len(), loaded.records.len());
    for (a, b) in outcome.log.records.iter().zip(&loaded.records) {
        assert_eq!(a, b, "record {} changed across save/load", a.index);
    }

    // 2. Does an in-memory resume replay the whole log?
    let options = TuneOptions { resume: Some(&outcome.log), ..TuneOptions::default() };
    let resumed =
        run_tuner(&testbed, &production, &space, &policy, 3, &options, |_| Ok(())).unwrap();
    assert_eq!(resumed.log.records, outcome.log.records);

    // 3. Same, from the loaded copy.
    let options = TuneOptions { resume: Some(&loaded), ..TuneOptions::default() };
    let resumed =
        run_tuner(&testbed, &production, &space, &policy, 3, &options, |_| Ok(())).unwrap();
    assert_eq!(resumed.log.records, outcome.log.records);
}
