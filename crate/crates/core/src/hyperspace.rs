//! Hyperparameter search spaces and their unit-hypercube encoding.
//!
//! The surrogate model works on points of `[0, 1]^d`. Every parameter of a
//! [`SearchSpace`] owns one coordinate: continuous parameters map linearly
//! (or linearly in `log10` space), while integer and categorical parameters are
//! relaxed to a continuous coordinate that is discretized with equal-width bins
//! when decoded.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Continuous,
    LogContinuous,
    Integer,
    Categorical,
}

/// One dimension of a search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ParamSpec {
    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::bounded(name, ParamKind::Continuous, lower, upper)
    }

    pub fn log_continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::bounded(name, ParamKind::LogContinuous, lower, upper)
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Self {
        Self::bounded(name, ParamKind::Integer, lower as f64, upper as f64)
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ParamKind::Categorical,
            lower: None,
            upper: None,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    fn bounded(name: impl Into<String>, kind: ParamKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            lower: Some(lower),
            upper: Some(upper),
            categories: Vec::new(),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lower.unwrap_or(0.0), self.upper.unwrap_or(1.0))
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| {
            Err(Error::InvalidSpace(format!(
                "parameter `{}`: {msg}",
                self.name
            )))
        };
        if self.name.is_empty() {
            return Err(Error::InvalidSpace("parameter with empty name".into()));
        }
        match self.kind {
            ParamKind::Categorical => {
                if self.categories.is_empty() {
                    return fail("categorical parameter needs at least one category");
                }
                let mut seen = HashSet::new();
                for c in &self.categories {
                    if !seen.insert(c.as_str()) {
                        return fail(&format!("duplicate category `{c}`"));
                    }
                }
            }
            kind => {
                let (Some(lo), Some(hi)) = (self.lower, self.upper) else {
                    return fail("lower and upper bounds are required");
                };
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return fail("lower must be strictly below upper");
                }
                if kind == ParamKind::LogContinuous && lo <= 0.0 {
                    return fail("log-continuous lower bound must be positive");
                }
                if kind == ParamKind::Integer && (lo.fract() != 0.0 || hi.fract() != 0.0) {
                    return fail("integer bounds must be whole numbers");
                }
            }
        }
        Ok(())
    }

    /// Maps one unit coordinate onto a raw value.
    pub fn decode_coord(&self, u: f64) -> ParamValue {
        let (lo, hi) = self.bounds();
        match self.kind {
            ParamKind::Continuous => ParamValue::Real((lo + u * (hi - lo)).clamp(lo, hi)),
            ParamKind::LogContinuous => {
                let (llo, lhi) = (lo.log10(), hi.log10());
                ParamValue::Real(10f64.powf(llo + u * (lhi - llo)).clamp(lo, hi))
            }
            ParamKind::Integer => {
                let v = (lo + u * (hi - lo + 1.0)).floor().clamp(lo, hi);
                ParamValue::Int(v as i64)
            }
            ParamKind::Categorical => {
                let c = self.categories.len();
                let idx = ((u * c as f64).floor() as usize).min(c - 1);
                ParamValue::Category(self.categories[idx].clone())
            }
        }
    }

    /// Maps one raw value back onto its unit coordinate (bin centre for
    /// discrete kinds).
    pub fn encode_value(&self, value: &ParamValue) -> Result<f64> {
        let (lo, hi) = self.bounds();
        let out_of_bounds =
            || Error::InvalidConfig(format!("value {value} out of bounds for `{}`", self.name));
        match self.kind {
            ParamKind::Continuous | ParamKind::LogContinuous => {
                let v = value.as_f64().ok_or_else(out_of_bounds)?;
                if !(lo..=hi).contains(&v) {
                    return Err(out_of_bounds());
                }
                Ok(if self.kind == ParamKind::Continuous {
                    (v - lo) / (hi - lo)
                } else {
                    (v.log10() - lo.log10()) / (hi.log10() - lo.log10())
                })
            }
            ParamKind::Integer => {
                let v = match value {
                    ParamValue::Int(i) => *i as f64,
                    ParamValue::Real(r) if r.fract() == 0.0 => *r,
                    _ => return Err(out_of_bounds()),
                };
                if !(lo..=hi).contains(&v) {
                    return Err(out_of_bounds());
                }
                Ok((v - lo + 0.5) / (hi - lo + 1.0))
            }
            ParamKind::Categorical => {
                let ParamValue::Category(name) = value else {
                    return Err(out_of_bounds());
                };
                let idx = self
                    .categories
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(out_of_bounds)?;
                Ok((idx as f64 + 0.5) / self.categories.len() as f64)
            }
        }
    }

    fn admits(&self, value: &ParamValue) -> bool {
        self.encode_value(value).is_ok()
    }
}

/// A raw hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Category(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Category(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            ParamValue::Real(r) if r.fract() == 0.0 => Some(*r as i64),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            ParamValue::Category(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Category(c) => write!(f, "{c}"),
        }
    }
}

/// A hyperparameter configuration: one raw value per parameter name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config {
    pub values: BTreeMap<String, ParamValue>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: ParamValue) -> Self {
        self.values.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Deserialize)]
struct RawSpace {
    params: Vec<ParamSpec>,
}

/// An ordered list of parameters; the order fixes the coordinate layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl TryFrom<RawSpace> for SearchSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        SearchSpace::new(raw.params)
    }
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidSpace("search space has no parameters".into()));
        }
        let mut names = HashSet::new();
        for p in &params {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate parameter name `{}`",
                    p.name
                )));
            }
        }
        Ok(Self { params })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("search space serializes")
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Hex SHA-256 of the canonical JSON form, used to tag run artifacts.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn decode(&self, u: &[f64]) -> Result<Config> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        let mut config = Config::new();
        for (index, (p, &x)) in self.params.iter().zip(u).enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::OutOfUnitCube { index, value: x });
            }
            config.values.insert(p.name.clone(), p.decode_coord(x));
        }
        Ok(config)
    }

    pub fn encode(&self, config: &Config) -> Result<Vec<f64>> {
        if let Some(unknown) = config.values.keys().find(|k| self.param(k).is_none()) {
            return Err(Error::InvalidConfig(format!(
                "unknown parameter `{unknown}`"
            )));
        }
        self.params
            .iter()
            .map(|p| {
                let v = config.get(&p.name).ok_or_else(|| {
                    Error::InvalidConfig(format!("missing value for `{}`", p.name))
                })?;
                p.encode_value(v)
            })
            .collect()
    }

    /// Checks that `config` has exactly one in-bounds value per parameter.
    pub fn validate(&self, config: &Config) -> Result<()> {
        if config.values.len() != self.dim() {
            return Err(Error::InvalidConfig(format!(
                "expected {} values, got {}",
                self.dim(),
                config.values.len()
            )));
        }
        for p in &self.params {
            match config.get(&p.name) {
                Some(v) if p.admits(v) => {}
                Some(v) => {
                    return Err(Error::InvalidConfig(format!(
                        "value {v} invalid for `{}`",
                        p.name
                    )))
                }
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "missing value for `{}`",
                        p.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Uniform draw from the unit hypercube.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.random::<f64>()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn svm_like() -> SearchSpace {
        SearchSpace::new(vec![
            ParamSpec::log_continuous("C", 1e-5, 1e5),
            ParamSpec::categorical("kernel", ["linear", "rbf", "poly", "sigmoid"]),
            ParamSpec::integer("degree", 1, 10),
            ParamSpec::continuous("mix", -2.0, 3.0),
        ])
        .unwrap()
    }

    #[test]
    fn log_decode_endpoints() {
        let space = SearchSpace::new(vec![ParamSpec::log_continuous("C", 1e-5, 1e5)]).unwrap();
        assert_eq!(
            space.decode(&[0.0]).unwrap().get("C"),
            Some(&ParamValue::Real(1e-5))
        );
        let mid = space
            .decode(&[0.5])
            .unwrap()
            .get("C")
            .unwrap()
            .as_f64()
            .unwrap();
        assert!((mid - 1.0).abs() < 1e-12);
        let enc = space
            .encode(&Config::new().with("C", ParamValue::Real(1.0)))
            .unwrap();
        assert!((enc[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn categorical_bins() {
        let space = SearchSpace::new(vec![ParamSpec::categorical(
            "kernel",
            ["linear", "rbf", "poly", "sigmoid"],
        )])
        .unwrap();
        let cat = |u: f64| space.decode(&[u]).unwrap().get("kernel").unwrap().clone();
        assert_eq!(cat(0.10), ParamValue::Category("linear".into()));
        assert_eq!(cat(0.26), ParamValue::Category("rbf".into()));
        assert_eq!(cat(1.0), ParamValue::Category("sigmoid".into()));
        let enc = space
            .encode(&Config::new().with("kernel", ParamValue::Category("rbf".into())))
            .unwrap();
        assert_eq!(enc, vec![0.375]);
    }

    #[test]
    fn integer_floor_and_clamp() {
        let p = ParamSpec::integer("k", 1, 30);
        assert_eq!(p.decode_coord(0.0), ParamValue::Int(1));
        assert_eq!(p.decode_coord(1.0), ParamValue::Int(30));
        assert_eq!(p.decode_coord(0.999_999), ParamValue::Int(30));
        assert_eq!(p.decode_coord(1.0 / 30.0 - 1e-12), ParamValue::Int(1));
    }

    #[test]
    fn decode_rejects_bad_points() {
        let space = svm_like();
        assert!(matches!(
            space.decode(&[0.5]),
            Err(Error::DimensionMismatch {
                expected: 4,
                got: 1
            })
        ));
        assert!(matches!(
            space.decode(&[0.5, 1.2, 0.0, 0.0]),
            Err(Error::OutOfUnitCube { index: 1, .. })
        ));
    }

    #[test]
    fn encode_rejects_unknown_and_out_of_bounds() {
        let space = SearchSpace::new(vec![ParamSpec::integer("k", 1, 30)]).unwrap();
        let unknown = Config::new()
            .with("k", ParamValue::Int(3))
            .with("z", ParamValue::Int(1));
        assert!(space.encode(&unknown).is_err());
        assert!(space
            .encode(&Config::new().with("k", ParamValue::Int(31)))
            .is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SearchSpace::new(vec![]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::continuous("a", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::log_continuous("a", 0.0, 1.0)]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::categorical("a", ["x", "x"])]).is_err());
        assert!(SearchSpace::new(vec![ParamSpec::categorical("a", Vec::<String>::new())]).is_err());
        assert!(SearchSpace::new(vec![
            ParamSpec::continuous("a", 0.0, 1.0),
            ParamSpec::continuous("a", 0.0, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn json_round_trip_uses_documented_field_names() {
        let text = r#"{"params":[{"name":"C","kind":"log-continuous","lower":1e-5,"upper":1e5},
            {"name":"kernel","kind":"categorical","categories":["linear","rbf","poly","sigmoid"]},
            {"name":"degree","kind":"integer","lower":1,"upper":10}]}"#;
        let space = SearchSpace::from_json(text).unwrap();
        assert_eq!(space.dim(), 3);
        assert_eq!(space.params()[0].kind, ParamKind::LogContinuous);
        let again = SearchSpace::from_json(&space.to_json()).unwrap();
        assert_eq!(space, again);
        assert!(SearchSpace::from_json(r#"{"params":[]}"#).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_uniform() {
        let space = svm_like();
        let a = space.sample(&mut ChaCha8Rng::seed_from_u64(3));
        let b = space.sample(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sums = vec![0.0; space.dim()];
        for _ in 0..10_000 {
            for (s, x) in sums.iter_mut().zip(space.sample(&mut rng)) {
                assert!((0.0..=1.0).contains(&x));
                *s += x;
            }
        }
        for s in sums {
            assert!((s / 10_000.0 - 0.5).abs() < 0.02);
        }
    }

    fn values_match(space: &SearchSpace, a: &Config, b: &Config) -> bool {
        space.params().iter().all(|p| {
            let (x, y) = (a.get(&p.name).unwrap(), b.get(&p.name).unwrap());
            match (x, y) {
                (ParamValue::Real(x), ParamValue::Real(y)) => {
                    (x - y).abs() <= 1e-9 * x.abs().max(1.0)
                }
                _ => x == y,
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn decode_is_total_and_valid(u in proptest::collection::vec(0.0f64..=1.0, 4)) {
            let space = svm_like();
            let config = space.decode(&u).unwrap();
            prop_assert!(space.validate(&config).is_ok());
        }

        #[test]
        fn decode_encode_is_identity(u in proptest::collection::vec(0.0f64..=1.0, 4)) {
            let space = svm_like();
            let config = space.decode(&u).unwrap();
            let back = space.decode(&space.encode(&config).unwrap()).unwrap();
            prop_assert!(values_match(&space, &config, &back));
            // Continuous coordinates survive encode(decode(u)).
            let enc = space.encode(&config).unwrap();
            prop_assert!((enc[0] - u[0]).abs() < 1e-9);
            prop_assert!((enc[3] - u[3]).abs() < 1e-12);
        }
    }
}
