//! Flat `key = value` run configuration with per-subcommand key schemas.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

/// Type of a configuration value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Count,
    Real,
    Text,
    Path,
    /// Comma-separated reals.
    Reals,
}

/// One accepted key with its default spelling.
#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

/// Parsed configuration value.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Count(usize),
    Real(f64),
    Text(String),
    Path(PathBuf),
    Reals(Vec<f64>),
}

fn parse_value(key: &str, kind: Kind, raw: &str) -> Result<Value> {
    let bad = |what: &str| Error::Config(format!("key `{key}`: expected {what}, got `{raw}`"));
    let real = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad("a real number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad("a finite real number"))
        }
    };
    Ok(match kind {
        Kind::Count => Value::Count(raw.parse().map_err(|_| bad("a non-negative integer"))?),
        Kind::Real => Value::Real(real(raw)?),
        Kind::Text => Value::Text(raw.to_string()),
        Kind::Path => Value::Path(PathBuf::from(raw)),
        Kind::Reals => Value::Reals(
            raw.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(real)
                .collect::<Result<_>>()?,
        ),
    })
}

/// `(key, value, line)` triples of a `key = value` file; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {line_no}: empty key")));
        }
        if out.iter().any(|(prev, _, _)| prev == k) {
            return Err(Error::Config(format!(
                "key `{k}` repeated on line {line_no}"
            )));
        }
        out.push((k.to_string(), v.trim().to_string(), line_no));
    }
    Ok(out)
}

/// Subcommand, typed parameters, output directory and seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub params: BTreeMap<String, Value>,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// Defaults from `schema`, overridden by `text`; unknown keys are rejected.
    pub fn build(
        subcommand: &str,
        schema: &[KeySpec],
        text: Option<&str>,
        out: PathBuf,
        seed: u64,
    ) -> Result<RunConfig> {
        let mut params = BTreeMap::new();
        for spec in schema {
            params.insert(
                spec.key.to_string(),
                parse_value(spec.key, spec.kind, spec.default)?,
            );
        }
        if let Some(text) = text {
            for (k, v, line) in parse_pairs(text)? {
                let spec = schema.iter().find(|s| s.key == k).ok_or_else(|| {
                    Error::Config(format!("unknown key `{k}` on line {line} for {subcommand}"))
                })?;
                params.insert(k.clone(), parse_value(&k, spec.kind, &v)?);
            }
        }
        Ok(RunConfig {
            subcommand: subcommand.to_string(),
            params,
            out,
            seed,
        })
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.params
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            Value::Count(v) => Ok(*v),
            _ => Err(Error::Config(format!("key `{key}` is not a count"))),
        }
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Real(v) => Ok(*v),
            Value::Count(v) => Ok(*v as f64),
            _ => Err(Error::Config(format!("key `{key}` is not a real"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<String> {
        match self.get(key)? {
            Value::Text(v) => Ok(v.clone()),
            Value::Path(p) => Ok(p.display().to_string()),
            _ => Err(Error::Config(format!("key `{key}` is not text"))),
        }
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            Value::Reals(v) => Ok(v.clone()),
            Value::Real(v) => Ok(vec![*v]),
            _ => Err(Error::Config(format!("key `{key}` is not a list of reals"))),
        }
    }

    /// Canonical `key → text` form for manifests.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        self.params
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    Value::Count(c) => c.to_string(),
                    Value::Real(r) => crate::report::fmt17(*r),
                    Value::Text(t) => t.clone(),
                    Value::Path(p) => p.display().to_string(),
                    Value::Reals(rs) => rs
                        .iter()
                        .map(|r| crate::report::fmt17(*r))
                        .collect::<Vec<_>>()
                        .join(","),
                };
                (k.clone(), s)
            })
            .collect()
    }
}
