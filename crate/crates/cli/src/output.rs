//! CSV formatting and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// `x` with 12 significant digits, fixed notation for moderate exponents.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Self::default();
        c.row(header.iter().map(|h| h.to_string()));
        c
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.text).with_context(|| format!("writing {}", path.display()))
    }
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Record of one command invocation; written next to its primary output.
pub struct Manifest {
    pub command: &'static str,
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Self {
            command,
            params: Map::new(),
            seed,
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Outputs next to the manifest are recorded by file name, so a rerun
    /// into another directory yields the same manifest.
    pub fn to_json(&self) -> Result<String> {
        let home = self.outputs.first().and_then(|p| p.parent());
        let outputs = self
            .outputs
            .iter()
            .map(|p| {
                let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
                let shown = match (p.parent(), p.file_name()) {
                    (parent, Some(name)) if parent == home => PathBuf::from(name),
                    _ => p.clone(),
                };
                Ok(json!({
                    "path": shown.display().to_string(),
                    "sha256": hex::encode(Sha256::digest(&bytes)),
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        let doc = json!({
            "command": self.command,
            "params": Value::Object(self.params.clone()),
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": outputs,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    /// Write to `<primary output>.manifest.json`.
    pub fn write(&self) -> Result<PathBuf> {
        let primary = self.outputs.first().context("manifest without outputs")?;
        let path = sibling(primary, ".manifest.json");
        fs::write(&path, self.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
