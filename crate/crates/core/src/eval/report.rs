use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub artifacts: Vec<PathBuf>,
}

impl EvalReport {
    pub fn new(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            values: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, v: f64) -> Self {
        self.values.insert(key.into(), v);
        self
    }

    pub fn set(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    /// Panics on a missing key; reports are built by this crate.
    pub fn get(&self, key: &str) -> f64 {
        *self
            .values
            .get(key)
            .unwrap_or_else(|| panic!("report {} has no value {key}", self.metric))
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self).expect("report serializes"))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.metric)?;
        let width = self.values.keys().map(String::len).max().unwrap_or(0);
        for (k, v) in &self.values {
            writeln!(f, "  {k:<width$}  {v:.6}")?;
        }
        for a in &self.artifacts {
            writeln!(f, "  artifact: {}", a.display())?;
        }
        Ok(())
    }
}
