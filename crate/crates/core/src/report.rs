//! Report envelope written by every CLI subcommand.
//!
//! Reports are JSON with a fixed field order, sorted map keys, and
//! shortest-round-trip number formatting, so identical inputs and parameters
//! always produce byte-identical files. Output is written atomically
//! (temp file in the target directory, then rename).

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Report schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: Tool,
    pub input: InputStamp,
    /// Parameters echoed back for auditability, including every default
    /// that applied.
    pub parameters: Map<String, Value>,
    /// Metric blocks keyed by module name.
    pub metrics: Map<String, Value>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct InputStamp {
    /// Input path as given, when the subcommand reads a file.
    pub path: Option<String>,
    /// SHA-256 of the input file bytes, or of the canonical parameter
    /// encoding for generated inputs.
    pub digest_sha256: String,
}

impl Report {
    pub fn new(input: InputStamp) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool: Tool { name: "uqkit", version: env!("CARGO_PKG_VERSION") },
            input,
            parameters: Map::new(),
            metrics: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn metrics_block(&mut self, module: &str, block: impl Serialize) {
        let value = serde_json::to_value(block).expect("metric blocks serialize");
        self.metrics.insert(module.to_string(), value);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

/// SHA-256 digest of a byte string, hex encoded.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in hash {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Write content atomically: temp file next to the target, then rename.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::fs::File::create(&tmp_path)?;
    file.write_all(content.as_bytes())?;
    file.sync_all()?;
    drop(file);
    std::fs::rename(&tmp_path, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            digest_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn report_json_is_deterministic() {
        let build = || {
            let mut report = Report::new(InputStamp {
                path: Some("x.csv".into()),
                digest_sha256: digest_bytes(b"x"),
            });
            report.parameter("bins", 10);
            report.parameter("alpha", 0.123456789);
            report.metrics_block("calibration", serde_json::json!({"ece": 0.015}));
            report.warn("w");
            report.to_json()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert!(!path.with_extension("json.tmp").exists());
    }
}
