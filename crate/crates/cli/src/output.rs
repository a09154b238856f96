//! CSV formatting and atomic writes with a `run.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SIDECAR: &str = "run.json";

/// Shortest round-trip decimal, with `-0` printed as `0`. Magnitudes
/// outside `[1e-5, 1e16)` use exponent notation.
pub fn num(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-5..1e16).contains(&m) || !m.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Csv { text: String::new() };
        c.row(header.iter().map(|s| s.to_string()));
        c
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the config with run-local keys (`threads`, `out`) removed.
/// Object keys serialize sorted, so the form is canonical.
pub fn config_hash(config: &Value) -> String {
    let mut v = config.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("threads");
        obj.remove("out");
    }
    sha256_hex(serde_json::to_string(&v).expect("JSON value serializes").as_bytes())
}

/// Everything a run writes, assembled in memory before touching disk.
pub struct RunOutput {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub extra: Map<String, Value>,
}

impl RunOutput {
    pub fn sidecar(&self) -> Value {
        let files: Map<String, Value> =
            self.files.iter().map(|(name, bytes)| (name.to_string(), Value::String(sha256_hex(bytes)))).collect();
        let mut v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config_hash": config_hash(&self.config),
            "config": self.config,
            "files": files,
        });
        let obj = v.as_object_mut().expect("object literal");
        for (k, x) in &self.extra {
            obj.insert(k.clone(), x.clone());
        }
        v
    }

    /// Writes every file to a temporary name and renames them into place.
    /// Nothing is left behind on failure.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut sidecar = serde_json::to_string_pretty(&self.sidecar()).expect("JSON value serializes");
        sidecar.push('\n');
        let mut all: Vec<(&str, &[u8])> = self.files.iter().map(|(n, b)| (*n, b.as_slice())).collect();
        all.push((SIDECAR, sidecar.as_bytes()));

        let pid = std::process::id();
        let mut temps = Vec::new();
        let result = (|| {
            for (name, bytes) in &all {
                let tmp = dir.join(format!(".{name}.{pid}.tmp"));
                temps.push((tmp.clone(), dir.join(name)));
                fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
            }
            for (tmp, dest) in &temps {
                fs::rename(tmp, dest).map_err(|e| io_err(dest, e))?;
            }
            Ok(())
        })();
        if result.is_err() {
            for (tmp, _) in &temps {
                let _ = fs::remove_file(tmp);
            }
        }
        result.map(|_| temps.into_iter().map(|(_, d)| d).collect())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
