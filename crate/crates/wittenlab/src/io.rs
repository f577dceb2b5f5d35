//! Output artifacts: CSV tables and JSON documents, staged in memory and written together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const SUMMARY_FILE: &str = "summary.json";

/// Shortest round-trip decimal form, so equal values always print identically.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug)]
pub struct Artifacts {
    config_hash: String,
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn new(config_hash: &str) -> Self {
        Artifacts { config_hash: config_hash.into(), files: BTreeMap::new() }
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// CSV table preceded by a `# config_hash=` comment line.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut out = format!("# config_hash={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header).map_err(csv_error)?;
            for r in rows {
                if r.len() != header.len() {
                    return Err(Error::InvalidArgument(format!("{name}: row of {} fields for {} columns", r.len(), header.len())));
                }
                w.write_record(r).map_err(csv_error)?;
            }
            w.flush()?;
        }
        self.insert(name, out)
    }

    /// JSON document `{"config_hash": …, "data": …}`.
    pub fn json(&mut self, name: &str, data: &impl Serialize) -> Result<()> {
        let doc = json!({ "config_hash": self.config_hash, "data": to_value(data)? });
        self.insert(name, pretty(&doc)?)
    }

    /// `summary.json`; the timestamp lives only in its `header`.
    pub fn summary(&mut self, command: &str, experiment: &str, body: &impl Serialize) -> Result<()> {
        let generated_at = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let doc = json!({
            "header": {
                "command": command,
                "experiment": experiment,
                "config_hash": self.config_hash,
                "version": env!("CARGO_PKG_VERSION"),
                "generated_at": generated_at,
            },
            "body": to_value(body)?,
        });
        self.insert(SUMMARY_FILE, pretty(&doc)?)
    }

    fn insert(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        if self.files.insert(name.into(), bytes).is_some() {
            return Err(Error::InvalidArgument(format!("artifact {name} written twice")));
        }
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    /// Summary body as a JSON value.
    pub fn summary_body(&self) -> Option<Value> {
        let v: Value = serde_json::from_slice(self.get(SUMMARY_FILE)?).ok()?;
        v.get("body").cloned()
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes)?;
            out.push(p);
        }
        Ok(out)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidArgument(format!("serialization: {e}")))
}

fn pretty(v: &Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Error::InvalidArgument(format!("serialization: {e}")))?;
    s.push(b'\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_carries_the_hash() {
        let mut a = Artifacts::new("abc");
        a.csv("x.csv", &["t", "value"], &[vec![num(1.5), num(0.1)]]).unwrap();
        let text = String::from_utf8(a.get("x.csv").unwrap().to_vec()).unwrap();
        assert_eq!(text, "# config_hash=abc\nt,value\n1.5e0,1e-1\n");
        assert!(a.csv("x.csv", &["t"], &[]).is_err());
        assert!(a.csv("y.csv", &["t"], &[vec!["1".into(), "2".into()]]).is_err());
    }

    #[test]
    fn summary_body_round_trips() {
        let mut a = Artifacts::new("abc");
        a.summary("spectra", "e", &json!({"betti": [1, 2, 1]})).unwrap();
        assert_eq!(a.summary_body().unwrap()["betti"], json!([1, 2, 1]));
        let doc: Value = serde_json::from_slice(a.get(SUMMARY_FILE).unwrap()).unwrap();
        assert_eq!(doc["header"]["config_hash"], "abc");
    }

    #[test]
    fn num_round_trips() {
        for v in [0.1, 1e-300, 123456.789, -2.5e-17] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
