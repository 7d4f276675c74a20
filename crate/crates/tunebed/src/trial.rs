//! Trial logs: the durable record of every measured run.
//!
//! Each log is a JSONL file — a header line followed by one record per
//! run, appended as runs finish. The header pins the configuration space
//! (by fingerprint) and the master seed so a log can be replayed or
//! resumed safely. Records carry both the measured time and the *charged*
//! time (zero for memoized repeats of deterministic targets), so budget
//! accounting can be audited after the fact.

use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::space::{ConfigurationSpace, Value};

const FORMAT: &str = "tunebed-trials";
const VERSION: u32 = 1;

/// Which stage of the tuning pipeline issued a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Timing probes taken before budget derivation.
    Probe,
    /// Initial space-filling design.
    Init,
    /// Exploration half of the search loop.
    Explore,
    /// Exploitation half of the search loop.
    Exploit,
    /// Full-scale validation of finalists.
    Validate,
    /// Testbed-planning measurements.
    Plan,
}

/// Where a run executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Platform {
    Testbed,
    Production,
}

/// One measured run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Zero-based position in the log.
    pub index: usize,
    pub phase: Phase,
    pub platform: Platform,
    /// Search-loop iteration (0 outside the loop).
    pub iteration: usize,
    /// Parameter values in space order.
    pub config: Vec<Value>,
    /// Fraction of the production dataset used.
    pub data_scale: f64,
    /// Number of machines used.
    pub machines: u32,
    /// Measured execution time.
    pub time_ms: f64,
    /// Time charged against the budget (0 for memoized repeats).
    pub charged_ms: f64,
    /// Seed handed to the target for this run.
    pub seed: u64,
    /// Budget consumed after this run committed.
    pub elapsed_ms: f64,
}

/// First line of a trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    /// Name of the configuration space.
    pub space: String,
    /// Number of parameters; every record's config must match.
    pub dimension: usize,
    /// Fingerprint of the space definition, for resume safety.
    pub space_fingerprint: u64,
    /// Which algorithm produced the log.
    pub algorithm: String,
    pub master_seed: u64,
}

impl LogHeader {
    pub fn new(space: &ConfigurationSpace, algorithm: &str, master_seed: u64) -> Self {
        LogHeader {
            format: FORMAT.into(),
            version: VERSION,
            space: space.name().to_string(),
            dimension: space.dimension(),
            space_fingerprint: space.fingerprint(),
            algorithm: algorithm.to_string(),
            master_seed,
        }
    }
}

/// A parsed trial log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
    /// True when the file ended mid-record (e.g. a crash while appending);
    /// the partial line is dropped and everything before it is kept.
    pub truncated: bool,
}

impl TrialLog {
    /// Parse a JSONL trial log. A malformed *interior* line is an error
    /// (the file is corrupt); a malformed *final* line is treated as a
    /// truncated append and flagged instead.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = Vec::new();
        for line in reader.lines() {
            lines.push(line?);
        }
        while lines.last().is_some_and(|l| l.trim().is_empty()) {
            lines.pop();
        }
        if lines.is_empty() {
            return Err(Error::LogFormat { line: 1, message: "empty log file".into() });
        }
        let header: LogHeader = serde_json::from_str(&lines[0]).map_err(|e| Error::LogFormat {
            line: 1,
            message: format!("bad header: {e}"),
        })?;
        if header.format != FORMAT {
            return Err(Error::LogFormat {
                line: 1,
                message: format!("not a trial log (format {:?})", header.format),
            });
        }
        if header.version != VERSION {
            return Err(Error::LogFormat {
                line: 1,
                message: format!("unsupported version {} (expected {VERSION})", header.version),
            });
        }
        let mut records = Vec::with_capacity(lines.len() - 1);
        let mut truncated = false;
        for (i, line) in lines.iter().enumerate().skip(1) {
            match serde_json::from_str::<TrialRecord>(line) {
                Ok(r) => {
                    if r.config.len() != header.dimension {
                        return Err(Error::LogFormat {
                            line: i + 1,
                            message: format!(
                                "record has {} values, space has {}",
                                r.config.len(),
                                header.dimension
                            ),
                        });
                    }
                    records.push(r);
                }
                Err(e) if i == lines.len() - 1 => {
                    // Final line only: a crash mid-append leaves a partial
                    // record, which is recoverable.
                    let _ = e;
                    truncated = true;
                }
                Err(e) => {
                    return Err(Error::LogFormat { line: i + 1, message: e.to_string() });
                }
            }
        }
        Ok(TrialLog { header, records, truncated })
    }

    /// Write a complete log in one shot.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = LogWriter::create(path, self.header.clone())?;
        for r in &self.records {
            writer.append(r)?;
        }
        Ok(())
    }

    /// Records measured on the production platform.
    pub fn production_records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| r.platform == Platform::Production)
    }

    /// The fastest record under `platform`, ties to the earliest index.
    pub fn best_on(&self, platform: Platform) -> Option<&TrialRecord> {
        self.records
            .iter()
            .filter(|r| r.platform == platform)
            .min_by(|a, b| a.time_ms.total_cmp(&b.time_ms).then(a.index.cmp(&b.index)))
    }
}

/// Incremental JSONL writer: header first, then one record per line,
/// flushed on every append so crashes lose at most the in-flight record.
pub struct LogWriter {
    file: std::io::BufWriter<std::fs::File>,
    next_index: usize,
}

impl LogWriter {
    pub fn create(path: impl AsRef<Path>, header: LogHeader) -> Result<Self> {
        let file = std::fs::File::create(path)?;
        let mut writer = LogWriter { file: std::io::BufWriter::new(file), next_index: 0 };
        let line = serde_json::to_string(&header)?;
        writer.file.write_all(line.as_bytes())?;
        writer.file.write_all(b"\n")?;
        writer.file.flush()?;
        Ok(writer)
    }

    /// Append one record; its `index` must be the next in sequence.
    pub fn append(&mut self, record: &TrialRecord) -> Result<()> {
        if record.index != self.next_index {
            return Err(Error::InvalidInput(format!(
                "record index {} out of order (expected {})",
                record.index, self.next_index
            )));
        }
        let line = serde_json::to_string(record)?;
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        self.next_index += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ConfigurationSpace, Domain, ParameterSpec};

    fn tiny_space() -> ConfigurationSpace {
        ConfigurationSpace::new(
            "tiny",
            vec![
                ParameterSpec {
                    name: "a".into(),
                    domain: Domain::Integer { lower: 1, upper: 10 },
                    default: Value::Int(4),
                },
                ParameterSpec {
                    name: "b".into(),
                    domain: Domain::Boolean,
                    default: Value::Bool(true),
                },
            ],
        )
        .unwrap()
    }

    fn record(index: usize, time_ms: f64, platform: Platform) -> TrialRecord {
        TrialRecord {
            index,
            phase: Phase::Init,
            platform,
            iteration: 0,
            config: vec![Value::Int(3), Value::Bool(false)],
            data_scale: 0.0625,
            machines: 5,
            time_ms,
            charged_ms: time_ms,
            seed: 77,
            elapsed_ms: time_ms,
        }
    }

    #[test]
    fn round_trips_losslessly() {
        let space = tiny_space();
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 42),
            records: vec![
                record(0, 120.5, Platform::Testbed),
                record(1, 98.25, Platform::Testbed),
                record(2, 1510.0, Platform::Production),
            ],
            truncated: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        log.save(&path).unwrap();
        let loaded = TrialLog::load(&path).unwrap();
        assert_eq!(loaded, log);
        assert_eq!(loaded.header.dimension, 2);
        assert_eq!(loaded.header.space_fingerprint, space.fingerprint());
    }

    #[test]
    fn full_precision_reals_survive_the_json_round_trip() {
        // A double with 17 significant digits sits exactly on the edge of
        // what decimal JSON can carry. The resume and replay paths compare
        // configurations bit-for-bit, so a parse that lands even one ulp off
        // would make a freshly loaded log disagree with the run it records.
        let space = tiny_space();
        let awkward = 0.107_463_692_907_033_21_f64;
        let mut noisy = record(0, 19.684_028_553_542_513, Platform::Testbed);
        noisy.config = vec![Value::Real(awkward), Value::Bool(false)];
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 3),
            records: vec![noisy],
            truncated: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        log.save(&path).unwrap();
        let loaded = TrialLog::load(&path).unwrap();
        match &loaded.records[0].config[0] {
            Value::Real(r) => assert_eq!(r.to_bits(), awkward.to_bits()),
            other => panic!("expected a real, got {other:?}"),
        }
        assert_eq!(loaded.records[0].time_ms.to_bits(), log.records[0].time_ms.to_bits());
    }

    #[test]
    fn truncated_final_line_is_recovered() {
        let space = tiny_space();
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 1),
            records: vec![record(0, 10.0, Platform::Testbed), record(1, 11.0, Platform::Testbed)],
            truncated: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        log.save(&path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"index\":2,\"phase\":\"init\",\"pl"); // crash mid-append
        std::fs::write(&path, text).unwrap();
        let loaded = TrialLog::load(&path).unwrap();
        assert!(loaded.truncated);
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.records[1].time_ms, 11.0);
    }

    #[test]
    fn malformed_interior_line_is_an_error_with_line_number() {
        let space = tiny_space();
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 1),
            records: vec![record(0, 10.0, Platform::Testbed), record(1, 11.0, Platform::Testbed)],
            truncated: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        log.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = "{\"broken\": true}";
        std::fs::write(&path, lines.join("\n")).unwrap();
        match TrialLog::load(&path) {
            Err(Error::LogFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected LogFormat error, got {other:?}"),
        }
    }

    #[test]
    fn header_mismatches_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        std::fs::write(&path, "{\"not\":\"a header\"}\n").unwrap();
        assert!(matches!(TrialLog::load(&path), Err(Error::LogFormat { line: 1, .. })));
        std::fs::write(&path, "").unwrap();
        assert!(matches!(TrialLog::load(&path), Err(Error::LogFormat { line: 1, .. })));
    }

    #[test]
    fn best_on_breaks_ties_by_earliest_index() {
        let space = tiny_space();
        let log = TrialLog {
            header: LogHeader::new(&space, "autotune", 1),
            records: vec![
                record(0, 11.0, Platform::Testbed),
                record(1, 10.0, Platform::Testbed),
                record(2, 10.0, Platform::Testbed),
                record(3, 500.0, Platform::Production),
            ],
            truncated: false,
        };
        assert_eq!(log.best_on(Platform::Testbed).unwrap().index, 1);
        assert_eq!(log.best_on(Platform::Production).unwrap().index, 3);
        assert_eq!(log.production_records().count(), 1);
    }

    #[test]
    fn writer_enforces_index_order() {
        let space = tiny_space();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        let mut w = LogWriter::create(&path, LogHeader::new(&space, "autotune", 3)).unwrap();
        w.append(&record(0, 5.0, Platform::Testbed)).unwrap();
        assert!(w.append(&record(2, 5.0, Platform::Testbed)).is_err());
    }
}
