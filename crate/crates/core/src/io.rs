//! File formats: the JSON config with dotted-path overrides, circuit files,
//! JSONL records and CSV tables.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::GeneCircuit;
use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::train_gd::{TrainResult, Trainer};

/// Parses `text` as a config document, applies `key.path=value` overrides
/// (value parsed as JSON, falling back to a plain string) and validates.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc: Value = serde_json::from_str(text)?;
    if !doc.is_object() {
        return Err(Error::config("config must be a JSON object"));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ExperimentConfig = serde_json::from_value(doc)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{spec}` is not key=value")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!("override key `{key}` is malformed")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::config(format!("override `{key}` descends into a non-object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::config(format!("override `{key}` descends into a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitMeta {
    pub seed: u64,
    pub trainer: Trainer,
    pub target: String,
}

/// On-disk circuit: `{"n", "weights": rows, "meta"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub n: usize,
    pub weights: Vec<Vec<f64>>,
    pub meta: CircuitMeta,
}

impl CircuitFile {
    pub fn from_result(r: &TrainResult) -> Self {
        Self {
            n: r.circuit.n(),
            weights: r.circuit.to_rows(),
            meta: CircuitMeta {
                seed: r.seed,
                trainer: r.trainer,
                target: r.target.clone(),
            },
        }
    }

    pub fn circuit(&self) -> Result<GeneCircuit> {
        if self.weights.len() != self.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: self.weights.len(),
            });
        }
        GeneCircuit::from_rows(self.weights.clone())
    }
}

pub fn read_circuit(path: &Path) -> Result<CircuitFile> {
    let file: CircuitFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.circuit()?;
    Ok(file)
}

/// Round-trip float text: 17 significant digits, '.' decimal.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Builds a CSV document; every row must match the header width.
pub struct CsvTable {
    text: String,
    width: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "csv row width differs from header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes via a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .ok_or_else(|| Error::config(format!("`{}` is not a file path", path.display())))?;
    tmp.set_file_name(name);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Append-only JSONL file. Each record goes out as one `write` of the full
/// line, so an interrupted run leaves only whole lines behind.
pub struct JsonlWriter {
    file: File,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> Result<()> {
        let mut line = serde_json::to_vec(value)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        Ok(())
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
