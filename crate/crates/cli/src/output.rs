//! Number formatting, output placement and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SPINSYNTH_OUT_DIR";

/// Rounds to 15 significant digits.
pub fn sig15(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

/// CSV cell for `x` at 15 significant digits.
pub fn cell(x: f64) -> String {
    let y = sig15(x);
    let a = y.abs();
    if y == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{y}")
    } else {
        format!("{y:e}")
    }
}

/// Rounds every floating-point number inside `v` to 15 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(sig15(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_json),
        Value::Object(m) => m.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("output types serialize");
    round_json(&mut v);
    v
}

/// `explicit`, or `default_name` inside the output directory.
pub fn resolve(explicit: Option<&Path>, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
            dir.join(default_name)
        }
    }
}

/// Whether the output directory was configured through the environment.
pub fn out_dir_configured() -> bool {
    std::env::var_os(OUT_DIR_ENV).is_some()
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Writes a CSV file with the given header and numeric rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|&x| cell(x))).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    write_text(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Sidecar describing how an output was produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub params: Value,
    pub tolerances: Option<Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub summary: Value,
    pub runtime_seconds: f64,
}

/// Collects manifest fields while a command runs.
pub struct Run {
    command: String,
    started: Instant,
    params: Value,
    tolerances: Option<Value>,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &str, params: Value) -> Self {
        Run {
            command: command.to_string(),
            started: Instant::now(),
            params,
            tolerances: None,
            seed: None,
            outputs: Vec::new(),
        }
    }

    pub fn tolerances<T: Serialize>(mut self, tol: &T) -> Self {
        self.tolerances = Some(to_json(tol));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes `<primary>.manifest.json` next to the primary output.
    pub fn finish(self, primary: &Path, summary: Value) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            params: self.params,
            tolerances: self.tolerances,
            seed: self.seed,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            summary,
            runtime_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = manifest_path(primary);
        write_json(&path, &to_json(&manifest))?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}
