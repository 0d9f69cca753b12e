use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Flat experiment configuration. Each subcommand reads the keys it needs
/// and rejects the file if one of them is missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub trials: Option<usize>,

    /// Proposal and target for `bound` and `couple`.
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub k_list: Option<Vec<usize>>,

    /// `toy-sweep`.
    pub pairs: Option<usize>,
    pub n: Option<usize>,
    pub k_max: Option<usize>,

    /// `specdec`.
    pub alphabet: Option<usize>,
    pub context_len: Option<usize>,
    pub context: Option<Vec<usize>>,
    pub draft_len: Option<usize>,
    pub episodes: Option<usize>,
    pub modes: Option<Vec<String>>,
    pub target_sharpness: Option<f64>,
    pub drafter_sharpness: Option<f64>,
    pub rejection_baseline: Option<bool>,

    /// `wz-discrete`.
    pub p_a: Option<Vec<f64>>,
    pub t_given_a: Option<Vec<Vec<f64>>>,
    pub w_given_a: Option<Vec<Vec<f64>>>,
    pub l_max_list: Option<Vec<usize>>,
    pub schemes: Option<Vec<String>>,

    /// `gaussian-rd`.
    pub var_t_given_a: Option<f64>,
    pub samples: Option<usize>,
    pub var_w_list: Option<Vec<f64>>,
    pub selection_trials: Option<usize>,
    pub eval_trials: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

pub fn require<T: Clone>(value: &Option<T>, key: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::InvalidConfig(format!("missing key `{key}`")))
}

/// Requires a count of at least `min`.
pub fn require_count(value: &Option<usize>, key: &str, min: usize) -> Result<usize, CliError> {
    let v = require(value, key)?;
    if v < min {
        return Err(CliError::InvalidConfig(format!("`{key}` must be >= {min}, got {v}")));
    }
    Ok(v)
}

/// Requires a nonempty list of counts, each at least 1.
pub fn require_counts(value: &Option<Vec<usize>>, key: &str) -> Result<Vec<usize>, CliError> {
    let v = require(value, key)?;
    if v.is_empty() || v.contains(&0) {
        return Err(CliError::InvalidConfig(format!(
            "`{key}` must be a nonempty list of positive counts"
        )));
    }
    Ok(v)
}

pub fn require_list<T: Clone>(value: &Option<Vec<T>>, key: &str) -> Result<Vec<T>, CliError> {
    let v = require(value, key)?;
    if v.is_empty() {
        return Err(CliError::InvalidConfig(format!("`{key}` must be nonempty")));
    }
    Ok(v)
}
