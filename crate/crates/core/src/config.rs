//! Campaign files: one or more sweeps sharing a master seed.
//!
//! The native format is TOML (key = value with `[[sweep]]` sections); JSON
//! with the same structure is accepted too, as is a run manifest, whose
//! `config` member is a fully resolved campaign.
//!
//! ```toml
//! master_seed = 7
//! trials = 10000
//!
//! [[sweep]]
//! name = "zf-third"
//! constellation = { kind = "qam", M = 16 }
//! detectors = ["zf"]
//! users = { ratio = "1/3" }
//! snr_db = 0.0
//! m_grid = [12, 18, 24]
//! ```
//!
//! Sweep `i` runs with seed `mix_seed(master_seed, i)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constellation::ConstellationSpec;
use crate::detect::{DetectorKind, DEFAULT_ENUMERATION_BUDGET};
use crate::montecarlo::{ExperimentConfig, UserRule, DEFAULT_TRIALS};
use crate::rng::mix_seed;
use crate::{Error, Result};

pub const DEFAULT_MASTER_SEED: u64 = 20_210_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub target_errors: Option<u64>,
    #[serde(default)]
    pub enumeration_budget: Option<u64>,
    pub sweep: Vec<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub name: String,
    pub constellation: ConstellationSpec,
    pub detectors: Vec<DetectorKind>,
    pub users: UserRule,
    pub snr_db: f64,
    pub m_grid: Vec<usize>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub target_errors: Option<u64>,
}

/// A resolved campaign: every default filled in, every sweep seeded.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub master_seed: u64,
    pub sweeps: Vec<ExperimentConfig>,
}

impl CampaignFile {
    /// Parse TOML or JSON text. Errors carry the line and column reported by
    /// the parser.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON parse error at {e}")))?;
            let inner = match value.get("config") {
                Some(cfg) if value.get("toolkit_version").is_some() => cfg.clone(),
                _ => value,
            };
            serde_json::from_value(inner).map_err(|e| Error::Config(format!("JSON config error: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
        }
    }

    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Campaign> {
        if self.sweep.is_empty() {
            return Err(Error::Config("no [[sweep]] sections".into()));
        }
        let master_seed = seed_override.or(self.master_seed).unwrap_or(DEFAULT_MASTER_SEED);
        let mut names: Vec<&str> = self.sweep.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate sweep name '{}'", w[0])));
        }
        let sweeps = self
            .sweep
            .iter()
            .enumerate()
            .map(|(i, s)| ExperimentConfig {
                name: s.name.clone(),
                constellation: s.constellation.clone(),
                detectors: s.detectors.clone(),
                users: s.users,
                snr_db: s.snr_db,
                m_grid: s.m_grid.clone(),
                trials: s.trials.or(self.trials).unwrap_or(DEFAULT_TRIALS),
                master_seed: mix_seed(master_seed, i as u64),
                target_errors: s.target_errors.or(self.target_errors),
                enumeration_budget: self.enumeration_budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET),
            })
            .collect();
        Ok(Campaign { master_seed, sweeps })
    }
}

impl Campaign {
    /// Load, resolve and validate; validation failures name the sweep and
    /// the line where it is declared.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let located = |e: Error| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e)));
        let file = CampaignFile::parse(&text).map_err(located)?;
        let campaign = file.resolve(seed_override).map_err(located)?;
        for sweep in &campaign.sweeps {
            if let Err(e) = sweep.validate() {
                let line = find_line(&text, &sweep.name);
                return Err(Error::Config(format!("{}:{line}: {}", path.display(), strip_prefix(&e))));
            }
        }
        Ok(campaign)
    }

    /// The campaign as a file with every default spelled out.
    pub fn echo(&self) -> CampaignFile {
        let budget = self
            .sweeps
            .first()
            .map_or(DEFAULT_ENUMERATION_BUDGET, |s| s.enumeration_budget);
        CampaignFile {
            master_seed: Some(self.master_seed),
            trials: None,
            target_errors: None,
            enumeration_budget: Some(budget),
            sweep: self
                .sweeps
                .iter()
                .map(|s| SweepSection {
                    name: s.name.clone(),
                    constellation: s.constellation.clone(),
                    detectors: s.detectors.clone(),
                    users: s.users,
                    snr_db: s.snr_db,
                    m_grid: s.m_grid.clone(),
                    trials: Some(s.trials),
                    target_errors: s.target_errors,
                })
                .collect(),
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// 1-based line of the first quoted occurrence of `name`, or 1.
fn find_line(text: &str, name: &str) -> usize {
    let needle = format!("\"{name}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}
