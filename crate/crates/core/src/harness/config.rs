use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Keys the line-oriented `key = value` config format accepts; anything
/// else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    // OFDM numerology
    "ofdm.k",
    "ofdm.cp_len",
    "ofdm.pilot_indices",
    "ofdm.pilot_values",
    "ofdm.null_indices",
    // JSCC training
    "train.epochs",
    "train.batch_size",
    "train.learning_rate",
    "train.papr_weight",
    "train.snr_db_min",
    "train.snr_db_max",
    "train.seed",
    "train.channel_width",
    // perturbation optimization
    "guard.alpha_lower",
    "guard.alpha_upper",
    "guard.phi_lower",
    "guard.phi_upper",
    "guard.step_size",
    "guard.delta",
    "guard.lambda_div",
    "guard.codebook_size",
    "guard.kappa",
    "guard.epochs",
    "guard.seed",
    "guard.snr_db",
    // experiment orchestration
    "exp.dataset",
    "exp.dataset_labels",
    "exp.test_dataset",
    "exp.test_labels",
    "exp.aux_dataset",
    "exp.encoder",
    "exp.decoder",
    "exp.classifier",
    "exp.surrogate_semi",
    "exp.surrogate_blackbox",
    "exp.channel",
    "exp.taps",
    "exp.cfo",
    "exp.timing_offset",
    "exp.snr_db",
    "exp.attacks",
    "exp.defense",
    "exp.task",
    "exp.packets",
    "exp.seed",
    "exp.target_class",
    "exp.classes",
];

/// Parsed `key = value` file. Lines starting with `#` and blank lines are
/// ignored; unknown keys are an error.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', found '{raw}'", lineno + 1))
            })?;
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(FileConfig { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "lookup of unregistered key {key}");
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad number for '{key}': '{v}'"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad integer for '{key}': '{v}'"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad integer for '{key}': '{v}'"))),
        }
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    pub fn require_str(&self, key: &str) -> Result<String> {
        self.get(key)
            .map(|s| s.to_string())
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn get_f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad list entry for '{key}': '{t}'")))
                })
                .collect(),
        }
    }

    pub fn get_i32_list(&self, key: &str, default: &[i32]) -> Result<Vec<i32>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad list entry for '{key}': '{t}'")))
                })
                .collect(),
        }
    }

    pub fn get_str_list(&self, key: &str, default: &[&str]) -> Vec<String> {
        match self.get(key) {
            None => default.iter().map(|s| s.to_string()).collect(),
            Some(v) => v.split(',').map(|t| t.trim().to_string()).collect(),
        }
    }
}
