use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use sqd_core::features::{ResampleConfig, WindowConfig};
use sqd_core::learner::{CrossValConfig, TreeConfig, DEFAULT_SWEEP_LENGTHS};
use sqd_core::sensor::SensorConfig;

pub const DEFAULT_CLIMBS: usize = 48;
pub const DEFAULT_JITTER: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
    pub jitter: f64,
    pub scenario: Option<PathBuf>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            n: DEFAULT_CLIMBS,
            jitter: DEFAULT_JITTER,
            scenario: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub lengths: Vec<usize>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            lengths: DEFAULT_SWEEP_LENGTHS.to_vec(),
        }
    }
}

/// Everything a run can be configured with. Loaded from TOML, then patched
/// by command-line flags; the result is echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub sensor: SensorConfig,
    pub simulate: SimulateSection,
    pub resample: ResampleConfig,
    pub window: WindowConfig,
    pub tree: TreeConfig,
    pub cv: CrossValConfig,
    pub evaluate: EvaluateSection,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Window lengths given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Lengths(pub Vec<usize>);

pub fn parse_length_arg(s: &str) -> Result<Lengths, String> {
    parse_lengths(s).map(Lengths)
}

/// Parse `5..60:5` (inclusive range with step), `a..b` (step 1) or a comma
/// list `5,10,45`.
pub fn parse_lengths(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("`{s}`: expected `start..end[:step]` or a comma list");
    let out: Vec<usize> = if let Some((range, step)) = s.split_once("..") {
        let (end, step) = match step.split_once(':') {
            Some((e, st)) => (e, st.trim().parse::<usize>().map_err(|_| bad())?),
            None => (step, 1),
        };
        let start: usize = range.trim().parse().map_err(|_| bad())?;
        let end: usize = end.trim().parse().map_err(|_| bad())?;
        if step == 0 || end < start {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}
