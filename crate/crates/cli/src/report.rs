use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

/// One named pass/fail check inside a report.
pub struct Checks(Vec<Value>);

impl Checks {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn add(&mut self, name: &str, pass: bool, value: impl Into<Value>) {
        self.0.push(json!({"name": name, "pass": pass, "value": value.into()}));
    }

    pub fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c["pass"] == true)
    }

    pub fn into_value(self) -> Value {
        Value::Array(self.0)
    }
}

pub struct Report {
    pub command: &'static str,
    pub parameters: Map<String, Value>,
    pub results: Value,
    pub seed: u64,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "parameters": self.parameters,
            "results": self.results,
            "seed": self.seed,
        })
    }

    pub fn write_json(&self, out: &mut dyn Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }

    /// Header row of dotted paths, one value row.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut cols = Vec::new();
        flatten("", &self.to_json(), &mut cols);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(cols.iter().map(|(k, _)| k))?;
        w.write_record(cols.iter().map(|(_, v)| v))?;
        w.flush()?;
        Ok(())
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) if !a.is_empty() => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_uses_dotted_paths() {
        let mut cols = Vec::new();
        flatten("", &json!({"a": {"b": [1, "x"]}, "c": null}), &mut cols);
        let keys: Vec<_> = cols.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["a.b.0", "a.b.1", "c"]);
        assert_eq!(cols[1].1, "x");
    }
}
