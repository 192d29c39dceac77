//! Run provenance: every artifact embeds the resolved configuration and
//! content hashes of the inputs it was computed from, so a result file
//! can always be traced back to exactly what produced it.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub struct RunContext {
    pub out_dir: PathBuf,
    pub config: ExperimentConfig,
    /// Hash of the raw config bytes as read (or of the serialized
    /// defaults when no file was given).
    pub config_sha256: String,
    /// (label, sha256) of any additional input files.
    pub input_shas: Vec<(String, String)>,
    pub quiet: bool,
}

impl RunContext {
    pub fn new(
        out_dir: &Path,
        config: ExperimentConfig,
        config_bytes: &[u8],
        quiet: bool,
    ) -> CliResult<Self> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Validation(format!("output {}: {e}", out_dir.display())))?;
        Ok(RunContext {
            out_dir: out_dir.to_path_buf(),
            config,
            config_sha256: sha256_hex(config_bytes),
            input_shas: Vec::new(),
            quiet,
        })
    }

    pub fn add_input(&mut self, label: &str, bytes: &[u8]) {
        self.input_shas.push((label.to_string(), sha256_hex(bytes)));
    }

    /// Comment lines prepended to CSV outputs.
    pub fn meta_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!(
                "resolved-config: {}",
                serde_json::to_string(&self.config).expect("config serializes")
            ),
            format!("config-sha256: {}", self.config_sha256),
        ];
        for (label, sha) in &self.input_shas {
            lines.push(format!("input-sha256 {label}={sha}"));
        }
        lines
    }

    /// The same provenance as one JSON object, for binary containers
    /// and JSON reports.
    pub fn meta_json(&self) -> String {
        let inputs: serde_json::Map<String, serde_json::Value> = self
            .input_shas
            .iter()
            .map(|(l, s)| (l.clone(), serde_json::Value::String(s.clone())))
            .collect();
        serde_json::json!({
            "resolved_config": &self.config,
            "config_sha256": self.config_sha256,
            "input_sha256": inputs,
        })
        .to_string()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_json(&self, name: &str, value: &serde_json::Value) -> CliResult<()> {
        let mut doc = value.clone();
        if let serde_json::Value::Object(map) = &mut doc {
            map.insert(
                "provenance".to_string(),
                serde_json::from_str(&self.meta_json()).expect("meta is json"),
            );
        }
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        fs::write(self.path(name), text + "\n")
            .map_err(|e| CliError::Validation(format!("write {name}: {e}")))?;
        self.say(&format!("wrote {}", self.path(name).display()));
        Ok(())
    }

    pub fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}
