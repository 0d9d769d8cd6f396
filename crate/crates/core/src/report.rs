//! Experiment records and deterministic text serialization.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! that artifacts are byte-identical across runs.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// `x` with 17 significant digits (`{:.16e}`); non-finite values as strings.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Structured record of a numerical check.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub anchor: String,
    pub inputs: Value,
    pub values: Value,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(name: &str, anchor: &str, inputs: Value, values: Value, pass: bool) -> Self {
        ExperimentReport {
            name: name.into(),
            anchor: anchor.into(),
            inputs,
            values,
            pass,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Pretty JSON with every float rendered by [`fmt17`]; non-finite floats become strings.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                out.push_str(&fmt17(x));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(xs) => {
            if xs.is_empty() {
                out.push_str("[]");
                return;
            }
            let scalar = xs.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if scalar {
                    if i > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    indent(level + 1, out);
                }
                write_value(x, level + 1, out);
            }
            if !scalar {
                out.push('\n');
                indent(level, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, x)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                indent(level + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, level + 1, out);
            }
            out.push('\n');
            indent(level, out);
            out.push('}');
        }
    }
}

/// Serializes non-finite floats as strings so they survive JSON.
pub fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(fmt17(x))
    }
}
