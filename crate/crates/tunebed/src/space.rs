//! Mixed configuration-parameter spaces.
//!
//! A [`ConfigurationSpace`] is an ordered list of named parameters, each
//! real, integer, boolean, or categorical. Order matters: it fixes the
//! meaning of every encoded vector, the category codes (declaration order),
//! and the layout of [`Configuration`] values. Spaces normally come from a
//! JSON definition file; see `data/spark.space.json` for the format.
//!
//! Numeric work (sampling, region arithmetic, the surrogate) happens in the
//! *encoded* space: one `f64` per parameter. Reals encode as themselves,
//! integers as their value, booleans as 0/1, and categoricals as their
//! category index. [`ConfigurationSpace::decode`] materializes an encoded
//! point back into a typed configuration — integers round half away from
//! zero, category codes floor — and is the inverse of
//! [`ConfigurationSpace::encode`] on every valid configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FNV-1a 64-bit hash; used to fingerprint spaces and training sets.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The domain of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Closed interval of reals.
    Real { lower: f64, upper: f64 },
    /// Closed interval of integers.
    Integer { lower: i64, upper: i64 },
    /// `false` / `true`; behaves like a two-category categorical.
    Boolean,
    /// Finite set of named categories; code = position in this list.
    Categorical { categories: Vec<String> },
}

/// One typed parameter value.
///
/// Serialized untagged, so a configuration reads as a plain JSON array like
/// `[4, 1024, 0.6, true, "lz4"]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

/// A named parameter with its domain and default.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub name: String,
    pub domain: Domain,
    pub default: Value,
}

impl ParameterSpec {
    /// Check all per-parameter invariants.
    fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpace(format!("{}: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidSpace("empty parameter name".into()));
        }
        match &self.domain {
            Domain::Real { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() || lower >= upper {
                    return fail(format!("real bounds [{lower}, {upper}] are not ordered"));
                }
            }
            Domain::Integer { lower, upper } => {
                if lower >= upper {
                    return fail(format!("integer bounds [{lower}, {upper}] are not ordered"));
                }
            }
            Domain::Boolean => {}
            Domain::Categorical { categories } => {
                if categories.len() < 2 {
                    return fail("categorical needs at least two categories".into());
                }
                let mut seen = std::collections::HashSet::new();
                for c in categories {
                    if !seen.insert(c) {
                        return fail(format!("duplicate category {c:?}"));
                    }
                }
            }
        }
        if let Some(msg) = self.value_violation(&self.default) {
            return fail(format!("default invalid: {msg}"));
        }
        Ok(())
    }

    /// Why `v` does not belong to this parameter's domain (None = it does).
    pub fn value_violation(&self, v: &Value) -> Option<String> {
        match (&self.domain, v) {
            (Domain::Real { lower, upper }, Value::Real(x)) => {
                if !x.is_finite() {
                    Some(format!("{x} is not finite"))
                } else if x < lower || x > upper {
                    Some(format!("{x} outside [{lower}, {upper}]"))
                } else {
                    None
                }
            }
            (Domain::Integer { lower, upper }, Value::Int(i)) => {
                if i < lower || i > upper {
                    Some(format!("{i} outside [{lower}, {upper}]"))
                } else {
                    None
                }
            }
            (Domain::Boolean, Value::Bool(_)) => None,
            (Domain::Categorical { categories }, Value::Text(s)) => {
                if categories.iter().any(|c| c == s) {
                    None
                } else {
                    Some(format!("{s:?} not in {categories:?}"))
                }
            }
            (_, other) => Some(format!("type mismatch: got {other}")),
        }
    }

    /// Encoded-space interval for this parameter.
    ///
    /// Reals and integers keep their bounds; booleans and categoricals use
    /// the half-open code range `[0, K)` so that flooring a uniform draw
    /// weights every category equally.
    pub fn encoded_interval(&self) -> (f64, f64) {
        match &self.domain {
            Domain::Real { lower, upper } => (*lower, *upper),
            Domain::Integer { lower, upper } => (*lower as f64, *upper as f64),
            Domain::Boolean => (0.0, 2.0),
            Domain::Categorical { categories } => (0.0, categories.len() as f64),
        }
    }

    /// Encode a (valid) value as its numeric code.
    pub fn encode_value(&self, v: &Value) -> Result<f64> {
        if let Some(msg) = self.value_violation(v) {
            return Err(Error::InvalidInput(format!("{}: {msg}", self.name)));
        }
        Ok(match (&self.domain, v) {
            (Domain::Real { .. }, Value::Real(x)) => *x,
            (Domain::Integer { .. }, Value::Int(i)) => *i as f64,
            (Domain::Boolean, Value::Bool(b)) => *b as u8 as f64,
            (Domain::Categorical { categories }, Value::Text(s)) => {
                categories.iter().position(|c| c == s).unwrap() as f64
            }
            _ => unreachable!("violation check covers mismatches"),
        })
    }

    /// Materialize an encoded coordinate into a typed value.
    ///
    /// Integers round half away from zero; boolean/categorical codes floor.
    /// Out-of-range coordinates clamp to the nearest valid value, so any
    /// finite input decodes to something valid.
    pub fn decode_value(&self, x: f64) -> Result<Value> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{}: cannot decode non-finite coordinate {x}",
                self.name
            )));
        }
        Ok(match &self.domain {
            Domain::Real { lower, upper } => Value::Real(x.clamp(*lower, *upper)),
            Domain::Integer { lower, upper } => {
                // f64::round rounds half away from zero.
                let r = x.round().clamp(*lower as f64, *upper as f64);
                Value::Int(r as i64)
            }
            Domain::Boolean => Value::Bool(x.floor().clamp(0.0, 1.0) as u8 != 0),
            Domain::Categorical { categories } => {
                let k = categories.len() as f64;
                let idx = x.floor().clamp(0.0, k - 1.0) as usize;
                Value::Text(categories[idx].clone())
            }
        })
    }
}

/// One concrete assignment of every parameter in a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    values: Vec<Value>,
}

impl Configuration {
    pub fn new(values: Vec<Value>) -> Self {
        Configuration { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.values.get(i)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A bound violation found by [`ConfigurationSpace::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub parameter: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.parameter, self.message)
    }
}

/// An ordered, named collection of parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct ConfigurationSpace {
    name: String,
    parameters: Vec<ParameterSpec>,
}

impl ConfigurationSpace {
    pub fn new(name: impl Into<String>, parameters: Vec<ParameterSpec>) -> Result<Self> {
        let name = name.into();
        if parameters.is_empty() {
            return Err(Error::InvalidSpace("a space needs at least one parameter".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &parameters {
            p.check()?;
            if !seen.insert(p.name.clone()) {
                return Err(Error::InvalidSpace(format!("duplicate parameter name {:?}", p.name)));
            }
        }
        Ok(ConfigurationSpace { name, parameters })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.parameters.len()
    }

    pub fn parameters(&self) -> &[ParameterSpec] {
        &self.parameters
    }

    pub fn parameter(&self, i: usize) -> &ParameterSpec {
        &self.parameters[i]
    }

    /// The vendor-default configuration (every parameter at its default).
    pub fn default_configuration(&self) -> Configuration {
        Configuration::new(self.parameters.iter().map(|p| p.default.clone()).collect())
    }

    /// Validate a configuration against the space.
    ///
    /// A wrong value *count* is a structural error (`Err`), not a violation
    /// list: the configuration cannot even be aligned with the parameters.
    /// Otherwise returns every per-parameter violation (empty = valid).
    pub fn validate(&self, config: &Configuration) -> Result<Vec<Violation>> {
        if config.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: config.len(),
            });
        }
        Ok(self
            .parameters
            .iter()
            .zip(config.values())
            .filter_map(|(p, v)| {
                p.value_violation(v).map(|message| Violation {
                    parameter: p.name.clone(),
                    message,
                })
            })
            .collect())
    }

    /// Encode a valid configuration as a numeric vector.
    pub fn encode(&self, config: &Configuration) -> Result<Vec<f64>> {
        if config.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: config.len(),
            });
        }
        self.parameters
            .iter()
            .zip(config.values())
            .map(|(p, v)| p.encode_value(v))
            .collect()
    }

    /// Materialize an encoded vector into a typed configuration.
    pub fn decode(&self, encoded: &[f64]) -> Result<Configuration> {
        if encoded.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: encoded.len(),
            });
        }
        let values = self
            .parameters
            .iter()
            .zip(encoded)
            .map(|(p, &x)| p.decode_value(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Configuration::new(values))
    }

    /// Stable fingerprint of the space definition (name, order, domains).
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_string(self).expect("space serializes");
        fnv1a64(json.as_bytes())
    }

    /// Load a space from a JSON definition file.
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// On-disk parameter record. `kind` selects which of the optional fields are
/// required; unknown kinds are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawParam {
    name: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
    default: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpace {
    name: String,
    parameters: Vec<RawParam>,
}

fn json_f64(name: &str, field: &str, v: &serde_json::Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::InvalidSpace(format!("{name}: {field} must be a number")))
}

fn json_i64(name: &str, field: &str, v: &serde_json::Value) -> Result<i64> {
    v.as_i64()
        .ok_or_else(|| Error::InvalidSpace(format!("{name}: {field} must be an integer")))
}

impl TryFrom<RawParam> for ParameterSpec {
    type Error = Error;

    fn try_from(raw: RawParam) -> Result<Self> {
        let name = raw.name.clone();
        let missing =
            |field: &str| Error::InvalidSpace(format!("{name}: kind {:?} needs {field}", raw.kind));
        let (domain, default) = match raw.kind.as_str() {
            "real" => {
                let lower = json_f64(&name, "lower", raw.lower.as_ref().ok_or_else(|| missing("lower"))?)?;
                let upper = json_f64(&name, "upper", raw.upper.as_ref().ok_or_else(|| missing("upper"))?)?;
                let d = json_f64(&name, "default", &raw.default)?;
                (Domain::Real { lower, upper }, Value::Real(d))
            }
            "integer" => {
                let lower = json_i64(&name, "lower", raw.lower.as_ref().ok_or_else(|| missing("lower"))?)?;
                let upper = json_i64(&name, "upper", raw.upper.as_ref().ok_or_else(|| missing("upper"))?)?;
                let d = json_i64(&name, "default", &raw.default)?;
                (Domain::Integer { lower, upper }, Value::Int(d))
            }
            "boolean" => {
                let d = raw
                    .default
                    .as_bool()
                    .ok_or_else(|| Error::InvalidSpace(format!("{name}: default must be a boolean")))?;
                (Domain::Boolean, Value::Bool(d))
            }
            "categorical" => {
                let categories = raw.categories.clone().ok_or_else(|| missing("categories"))?;
                let d = raw
                    .default
                    .as_str()
                    .ok_or_else(|| Error::InvalidSpace(format!("{name}: default must be a string")))?;
                (Domain::Categorical { categories }, Value::Text(d.to_string()))
            }
            other => {
                return Err(Error::InvalidSpace(format!("{name}: unknown kind {other:?}")));
            }
        };
        let spec = ParameterSpec { name: raw.name, domain, default };
        spec.check()?;
        Ok(spec)
    }
}

impl From<ParameterSpec> for RawParam {
    fn from(p: ParameterSpec) -> Self {
        let default = serde_json::to_value(&p.default).expect("value serializes");
        match p.domain {
            Domain::Real { lower, upper } => RawParam {
                name: p.name,
                kind: "real".into(),
                lower: Some(lower.into()),
                upper: Some(upper.into()),
                categories: None,
                default,
            },
            Domain::Integer { lower, upper } => RawParam {
                name: p.name,
                kind: "integer".into(),
                lower: Some(lower.into()),
                upper: Some(upper.into()),
                categories: None,
                default,
            },
            Domain::Boolean => RawParam {
                name: p.name,
                kind: "boolean".into(),
                lower: None,
                upper: None,
                categories: None,
                default,
            },
            Domain::Categorical { categories } => RawParam {
                name: p.name,
                kind: "categorical".into(),
                lower: None,
                upper: None,
                categories: Some(categories),
                default,
            },
        }
    }
}

impl TryFrom<RawSpace> for ConfigurationSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        let parameters = raw
            .parameters
            .into_iter()
            .map(ParameterSpec::try_from)
            .collect::<Result<Vec<_>>>()?;
        ConfigurationSpace::new(raw.name, parameters)
    }
}

impl From<ConfigurationSpace> for RawSpace {
    fn from(s: ConfigurationSpace) -> Self {
        RawSpace {
            name: s.name,
            parameters: s.parameters.into_iter().map(RawParam::from).collect(),
        }
    }
}
