use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// A typed scenario parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            ParamValue::Bool(_) => "bool",
            ParamValue::Int(_) => "int",
            ParamValue::Real(_) => "real",
            ParamValue::Text(_) => "text",
        }
    }

    /// Parses `text` as a value of the same type as `self`.
    fn parse_like(&self, key: &str, text: &str) -> Result<ParamValue> {
        let bad = || Error::Scenario(format!("parameter '{key}' expects {}, got '{text}'", self.type_name()));
        let t = text.trim();
        Ok(match self {
            ParamValue::Bool(_) => ParamValue::Bool(t.parse().map_err(|_| bad())?),
            ParamValue::Int(_) => ParamValue::Int(t.parse().map_err(|_| bad())?),
            ParamValue::Real(_) => {
                let v = match t {
                    "pi" => std::f64::consts::PI,
                    _ => t.parse().map_err(|_| bad())?,
                };
                if !v.is_finite() {
                    return Err(bad());
                }
                ParamValue::Real(v)
            }
            ParamValue::Text(_) => ParamValue::Text(t.to_string()),
        })
    }

    /// Converts a JSON value to the type of `self`.
    fn coerce_json(&self, key: &str, v: &Value) -> Result<ParamValue> {
        let bad = || Error::Scenario(format!("parameter '{key}' expects {}, got {v}", self.type_name()));
        Ok(match (self, v) {
            (ParamValue::Bool(_), Value::Bool(b)) => ParamValue::Bool(*b),
            (ParamValue::Int(_), Value::Number(n)) => ParamValue::Int(n.as_i64().ok_or_else(bad)?),
            (ParamValue::Real(_), Value::Number(n)) => ParamValue::Real(n.as_f64().ok_or_else(bad)?),
            (ParamValue::Text(_), Value::String(s)) => ParamValue::Text(s.clone()),
            (_, Value::String(s)) if !matches!(self, ParamValue::Text(_)) => self.parse_like(key, s)?,
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Text(s) => write!(f, "{s}"),
        }
    }
}

/// Declared parameter with its default.
#[derive(Clone, Debug)]
pub struct ParamDecl {
    pub key: &'static str,
    pub default: ParamValue,
    pub doc: &'static str,
}

impl ParamDecl {
    pub fn real(key: &'static str, v: f64, doc: &'static str) -> Self {
        Self { key, default: ParamValue::Real(v), doc }
    }

    pub fn int(key: &'static str, v: i64, doc: &'static str) -> Self {
        Self { key, default: ParamValue::Int(v), doc }
    }

    pub fn boolean(key: &'static str, v: bool, doc: &'static str) -> Self {
        Self { key, default: ParamValue::Bool(v), doc }
    }
}

/// A scenario invocation: name, seed and a complete parameter map.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    params: BTreeMap<String, ParamValue>,
}

/// On-disk spec file: `{"scenario": ..., "seed": ..., "params": {...}}`.
/// Parameters may be given flat with dotted keys or as nested objects.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    scenario: Option<String>,
    seed: Option<u64>,
    #[serde(default)]
    params: serde_json::Map<String, Value>,
}

fn flatten(prefix: &str, map: &serde_json::Map<String, Value>, out: &mut Vec<(String, Value)>) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

impl ScenarioSpec {
    /// Spec with every declared parameter at its default.
    pub fn with_defaults(name: &str, decls: &[ParamDecl], seed: u64) -> Self {
        Self {
            name: name.to_string(),
            seed,
            params: decls.iter().map(|d| (d.key.to_string(), d.default.clone())).collect(),
        }
    }

    /// Overrides one parameter from text; unknown keys are rejected.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let current = self
            .params
            .get(key)
            .ok_or_else(|| Error::UnknownParameter(key.to_string()))?;
        let v = current.parse_like(key, text)?;
        self.params.insert(key.to_string(), v);
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Scenario(format!("override '{pair}' is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Applies a JSON spec file on top of the current values. Returns an
    /// error if the file names a different scenario.
    pub fn apply_json(&mut self, text: &str) -> Result<()> {
        let file: SpecFile = serde_json::from_str(text)?;
        if let Some(name) = &file.scenario {
            if name != &self.name {
                return Err(Error::Scenario(format!(
                    "spec file is for scenario '{name}', not '{}'",
                    self.name
                )));
            }
        }
        if let Some(seed) = file.seed {
            self.seed = seed;
        }
        let mut flat = Vec::new();
        flatten("", &file.params, &mut flat);
        for (k, v) in flat {
            let current = self.params.get(&k).ok_or_else(|| Error::UnknownParameter(k.clone()))?;
            let value = current.coerce_json(&k, &v)?;
            self.params.insert(k, value);
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_json(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self) -> &BTreeMap<String, ParamValue> {
        &self.params
    }

    fn get(&self, key: &str) -> Result<&ParamValue> {
        self.params
            .get(key)
            .ok_or_else(|| Error::UnknownParameter(key.to_string()))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            other => Err(Error::Scenario(format!("parameter '{key}' is {}, not real", other.type_name()))),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.get(key)? {
            ParamValue::Int(v) => Ok(*v),
            other => Err(Error::Scenario(format!("parameter '{key}' is {}, not int", other.type_name()))),
        }
    }

    /// Integer parameter that must be at least `min`.
    pub fn count(&self, key: &str, min: i64) -> Result<usize> {
        let v = self.int(key)?;
        if v < min {
            return Err(Error::Scenario(format!("parameter '{key}' must be >= {min}, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn boolean(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            ParamValue::Bool(v) => Ok(*v),
            other => Err(Error::Scenario(format!("parameter '{key}' is {}, not bool", other.type_name()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls() -> Vec<ParamDecl> {
        vec![
            ParamDecl::real("packet.sigma", 0.4, ""),
            ParamDecl::int("n", 10, ""),
            ParamDecl::boolean("flag", true, ""),
        ]
    }

    #[test]
    fn overrides_are_typed() {
        let mut s = ScenarioSpec::with_defaults("x", &decls(), 1);
        s.set_pair("packet.sigma=0.5").unwrap();
        s.set("n", "7").unwrap();
        assert_eq!(s.real("packet.sigma").unwrap(), 0.5);
        assert_eq!(s.int("n").unwrap(), 7);
        assert!(s.set("n", "seven").is_err());
        assert!(matches!(s.set("nope", "1"), Err(Error::UnknownParameter(_))));
    }

    #[test]
    fn json_nested_and_dotted() {
        let mut s = ScenarioSpec::with_defaults("x", &decls(), 1);
        s.apply_json(r#"{"scenario": "x", "seed": 9, "params": {"packet": {"sigma": 0.7}, "n": 3}}"#)
            .unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.real("packet.sigma").unwrap(), 0.7);
        assert_eq!(s.int("n").unwrap(), 3);
        assert!(s.apply_json(r#"{"params": {"packet.width": 1.0}}"#).is_err());
        assert!(s.apply_json(r#"{"scenario": "y"}"#).is_err());
        assert!(s.apply_json(r#"{"params": {"n": 1.5}}"#).is_err());
    }
}
