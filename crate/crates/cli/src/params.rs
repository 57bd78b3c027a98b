//! Resolved campaign configuration: file < flags < `--set`, with every
//! default that a campaign reads written back so the digest covers it.

use std::path::Path;

use chaincert::config::{self, Model};
use chaincert::{Error, Result};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, Clone, Default)]
pub struct Params {
    table: Table,
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

impl Params {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let table = match path {
            None => Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        Ok(Self { table })
    }

    /// Sets a dotted key; a bare key lands in `[run]`.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let path: Vec<&str> = if key.contains('.') { key.split('.').collect() } else { vec!["run", key] };
        if path.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("bad key `{key}`")));
        }
        let mut t = &mut self.table;
        for part in &path[..path.len() - 1] {
            let entry = t.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
            t = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a table")))?;
        }
        t.insert(path[path.len() - 1].to_string(), value);
        Ok(())
    }

    /// `key=value`, with `value` read as a TOML literal when possible.
    pub fn set_assignment(&mut self, raw: &str) -> Result<()> {
        let (k, v) = raw.split_once('=').ok_or_else(|| Error::Config(format!("--set expects key=value, got `{raw}`")))?;
        self.set(k.trim(), parse_value(v.trim()))
    }

    fn section(&mut self, name: &str) -> Result<&mut Table> {
        self.table
            .entry(name.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{name}` must be a table")))
    }

    fn get_or(&mut self, key: &str, default: Value) -> Result<Value> {
        let (sec, k) = key.split_once('.').unwrap_or(("run", key));
        Ok(self.section(sec)?.entry(k.to_string()).or_insert(default).clone())
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get_or(key, Value::Float(default))? {
            Value::Float(x) => Ok(x),
            Value::Integer(i) => Ok(i as f64),
            v => Err(Error::Config(format!("`{key}` must be a number, got {v}"))),
        }
    }

    pub fn i64(&mut self, key: &str, default: i64) -> Result<i64> {
        match self.get_or(key, Value::Integer(default))? {
            Value::Integer(i) => Ok(i),
            v => Err(Error::Config(format!("`{key}` must be an integer, got {v}"))),
        }
    }

    pub fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.i64(key, default as i64)?;
        usize::try_from(v).map_err(|_| Error::Config(format!("`{key}` must be >= 0, got {v}")))
    }

    pub fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let d = Value::Array(default.iter().map(|&x| Value::Float(x)).collect());
        match self.get_or(key, d)? {
            Value::Array(a) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(Error::Config(format!("`{key}` must be a list of numbers"))),
                })
                .collect(),
            Value::Float(x) => Ok(vec![x]),
            Value::Integer(i) => Ok(vec![i as f64]),
            v => Err(Error::Config(format!("`{key}` must be a list of numbers, got {v}"))),
        }
    }

    pub fn usize_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        let d = Value::Array(default.iter().map(|&x| Value::Integer(x as i64)).collect());
        let items = match self.get_or(key, d)? {
            Value::Array(a) => a,
            v @ Value::Integer(_) => vec![v],
            v => return Err(Error::Config(format!("`{key}` must be a list of integers, got {v}"))),
        };
        items
            .iter()
            .map(|v| {
                v.as_integer()
                    .and_then(|i| usize::try_from(i).ok())
                    .ok_or_else(|| Error::Config(format!("`{key}` must be a list of non-negative integers")))
            })
            .collect()
    }

    /// `[model]`, defaulting to the named built-in.
    pub fn model(&mut self, default_builtin: &str, seed: u64) -> Result<Model> {
        self.model_with(default_builtin, &[], seed)
    }

    /// Like [`Params::model`]; `defaults` apply only when the built-in is defaulted.
    pub fn model_with(&mut self, default_builtin: &str, defaults: &[(&str, f64)], seed: u64) -> Result<Model> {
        let sec = self.section("model")?;
        if !sec.contains_key("builtin") && !sec.contains_key("terms") {
            sec.insert("builtin".into(), Value::String(default_builtin.into()));
            for (k, v) in defaults {
                sec.entry(k.to_string()).or_insert(Value::Float(*v));
            }
        }
        config::model_from_table(sec, seed)
    }

    /// `[mps]`, defaulting to AKLT.
    pub fn mps(&mut self) -> Result<(chaincert::z2::MpsTensor, chaincert::z2::TimeReversal)> {
        let sec = self.section("mps")?;
        if !sec.contains_key("builtin") && !sec.contains_key("tensors") {
            sec.insert("builtin".into(), Value::String("aklt".into()));
        }
        config::mps_from_table(sec)
    }

    /// Interval of `sites` sites, `[−⌊sites/2⌋, sites − 1 − ⌊sites/2⌋]`.
    pub fn volume(&mut self, default_sites: usize) -> Result<chaincert::chain::Volume> {
        let n = self.usize("sites", default_sites)? as i64;
        if n < 1 {
            return Err(Error::Config("sites must be >= 1".into()));
        }
        let a = -(n / 2);
        chaincert::chain::Volume::new(a, a + n - 1)
    }

    pub fn canonical_text(&self) -> String {
        toml::to_string(&self.table).unwrap_or_default()
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.table).unwrap_or(serde_json::Value::Null)
    }
}
