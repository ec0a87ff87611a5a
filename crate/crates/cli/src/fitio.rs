//! Fit-result files: one TOML document per estimated parameter set.
//!
//! The embedded `config_hash` ties a fit to the exact configuration that
//! produced it, so `evaluate` can reuse fits from an earlier `estimate` run
//! only when nothing relevant has changed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rctherm_core::estimate::{to_aggregates, EstimationMethod, EstimationResult};
use rctherm_core::evaluate::FitKey;
use rctherm_core::models::{ModelOrder, ParameterVector};
use rctherm_core::timeseries::Season;

use crate::error::{CliError, CliResult};

pub const FIT_SCHEMA: &str = "fit-v1";

/// Serialized form of one [`EstimationResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDocument {
    pub schema: String,
    /// Hash of the run configuration the fit was produced under.
    pub config_hash: String,
    pub method: String,
    pub order: String,
    pub train_season: String,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub start_index: usize,
    pub n_starts: usize,
    /// Physical parameters by schema name; floats are lossless in TOML.
    pub parameters: BTreeMap<String, f64>,
    /// Identifiable aggregates by label, for quick comparison across fits.
    pub aggregates: BTreeMap<String, f64>,
}

impl FitDocument {
    pub fn from_result(key: FitKey, result: &EstimationResult, config_hash: &str) -> Self {
        let parameters = result
            .theta_hat
            .named()
            .map(|(name, value)| (name.to_string(), value))
            .collect();
        let aggregates = result
            .aggregates
            .values
            .iter()
            .zip(rctherm_core::estimate::IdentifiableAggregates::labels(
                result.aggregates.order,
            ))
            .map(|(value, label)| (label.to_string(), *value))
            .collect();
        Self {
            schema: FIT_SCHEMA.to_string(),
            config_hash: config_hash.to_string(),
            method: key.method.label().to_string(),
            order: key.order.label().to_string(),
            train_season: key.train_season.label().to_string(),
            objective: result.objective,
            iterations: result.iterations,
            converged: result.converged,
            gradient_norm: result.gradient_norm,
            start_index: result.start_index,
            n_starts: result.n_starts,
            parameters,
            aggregates,
        }
    }

    pub fn key(&self) -> CliResult<FitKey> {
        let method = EstimationMethod::parse(&self.method)
            .ok_or_else(|| CliError::Config(format!("unknown method {:?}", self.method)))?;
        let order = ModelOrder::parse(&self.order)
            .ok_or_else(|| CliError::Config(format!("unknown order {:?}", self.order)))?;
        let train_season = Season::parse(&self.train_season)
            .ok_or_else(|| CliError::Config(format!("unknown season {:?}", self.train_season)))?;
        Ok(FitKey {
            method,
            order,
            train_season,
        })
    }

    /// Rebuilds the in-memory result (aggregates recomputed from θ).
    pub fn to_result(&self) -> CliResult<EstimationResult> {
        let key = self.key()?;
        let pairs: Vec<(&str, f64)> = self
            .parameters
            .iter()
            .map(|(name, value)| (name.as_str(), *value))
            .collect();
        let theta_hat = ParameterVector::from_named(key.order, &pairs)?;
        let aggregates = to_aggregates(&theta_hat);
        Ok(EstimationResult {
            method: key.method,
            theta_hat,
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            gradient_norm: self.gradient_norm,
            start_index: self.start_index,
            n_starts: self.n_starts,
            aggregates,
        })
    }
}

/// `fit_<method>_<order>_<season>.toml`, lowercase.
pub fn fit_file_name(key: FitKey) -> String {
    format!(
        "fit_{}_{}_{}.toml",
        key.method.label().to_lowercase(),
        key.order.label().to_lowercase(),
        key.train_season.label().to_lowercase()
    )
}

pub fn fit_path(out_dir: &Path, key: FitKey) -> PathBuf {
    out_dir.join(fit_file_name(key))
}

pub fn write_fit(path: &Path, doc: &FitDocument) -> CliResult<()> {
    let text = toml::to_string(doc)
        .map_err(|e| CliError::Config(format!("fit serialization: {e}")))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_fit(path: &Path) -> CliResult<FitDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: FitDocument = toml::from_str(&text).map_err(|e| CliError::FileFormat {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if doc.schema != FIT_SCHEMA {
        return Err(CliError::FileFormat {
            path: path.to_path_buf(),
            message: format!("unsupported schema {:?}", doc.schema),
        });
    }
    Ok(doc)
}

/// Loads a reusable fit: present, same schema, same config hash, same key.
/// Returns `None` when the file is absent or was produced under a different
/// configuration (stale fits are ignored, not errors).
pub fn load_matching_fit(
    out_dir: &Path,
    key: FitKey,
    config_hash: &str,
) -> CliResult<Option<EstimationResult>> {
    let path = fit_path(out_dir, key);
    if !path.exists() {
        return Ok(None);
    }
    let doc = read_fit(&path)?;
    if doc.config_hash != config_hash || doc.key()? != key {
        return Ok(None);
    }
    Ok(Some(doc.to_result()?))
}
