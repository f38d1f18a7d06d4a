use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;

use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run; together with the inputs it determines every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub config: Config,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &Config) -> Self {
        Self {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }

    pub fn write(mut self, dir: &Path, started: Instant) -> Result<()> {
        self.duration_s = started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self)? + "\n";
        sqd_core::station::write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(())
    }
}
