//! Optional JSON config file mirroring the command-line flags.
//!
//! A config file is a flat JSON object keyed by flag name (e.g.
//! `{"n": 3, "q": "1/2", "method": "formula"}`). Explicit flags always win
//! over config values.

use std::path::Path;

use serde_json::Value;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: serde_json::Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| format!("malformed config {}: {e}", path.display()))?;
        match value {
            Value::Object(values) => Ok(ConfigFile { values }),
            _ => Err(format!("config {} must be a JSON object", path.display())),
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        match self.values.get(key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        }
    }

    pub fn integer(&self, key: &str) -> Option<u64> {
        match self.values.get(key) {
            Some(Value::Number(n)) => n.as_u64(),
            Some(Value::String(s)) => s.parse().ok(),
            _ => None,
        }
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.values.get(key) {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => s.parse().ok(),
            _ => None,
        }
    }
}
