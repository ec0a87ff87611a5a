//! Subcommand implementations.
//!
//! Each command takes a [`Context`] (validated config plus resolved output
//! directory) and returns a [`Completion`]: `Clean` maps to exit 0,
//! `WithFailures` to exit 1, and any [`crate::error::CliError`] to exit 2.

pub mod estimate;
pub mod evaluate;
pub mod forward_sim;
pub mod generate;
pub mod report;

use std::path::{Path, PathBuf};

use rctherm_core::evaluate::SetpointClass;
use rctherm_core::rng::derive_seed;
use rctherm_core::timeseries::{synthesize_weather, TimeSeriesTable};

use crate::config::RunConfig;
use crate::csvio;
use crate::error::{CliError, CliResult};

/// Seed-derivation label for the synthetic weather stream.
pub const WEATHER_SEED_LABEL: &str = "weather";

pub const WEATHER_FILE: &str = "weather.csv";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const REPORT_FILE: &str = "report.md";

/// Validated configuration plus the resolved output directory.
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Context {
    /// Applies CLI overrides, validates, and creates the output directory.
    pub fn new(
        mut config: RunConfig,
        out_dir: Option<PathBuf>,
        seed: Option<u64>,
        jobs: Option<usize>,
    ) -> CliResult<Self> {
        if let Some(dir) = out_dir {
            config.out_dir = Some(dir);
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        if let Some(jobs) = jobs {
            config.jobs = jobs;
        }
        config.validate()?;
        let out_dir = config.out_dir()?.to_path_buf();
        std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
        Ok(Self { config, out_dir })
    }

    /// Ingests the configured weather CSV, or synthesizes the deterministic
    /// profile when none is configured.
    pub fn resolve_weather(&self) -> CliResult<TimeSeriesTable> {
        match &self.config.input.weather_csv {
            Some(path) => csvio::ingest_weather_csv(path, &self.config.input),
            None => {
                let profile = self.config.weather_profile()?;
                synthesize_weather(
                    self.config.synthetic.year_days,
                    self.config.synthetic.step_seconds,
                    &profile,
                    derive_seed(self.config.seed, WEATHER_SEED_LABEL),
                )
                .map_err(CliError::from)
            }
        }
    }
}

/// `truth_18c.csv`, `truth_22c.csv`, `truth_26c.csv`.
pub fn truth_file_name(setpoint: SetpointClass) -> String {
    format!("truth_{}.csv", setpoint.label().to_lowercase())
}

pub fn truth_path(out_dir: &Path, setpoint: SetpointClass) -> PathBuf {
    out_dir.join(truth_file_name(setpoint))
}

/// Parses repeated `--setpoints`-style flag values; `None` when no flags
/// were given (meaning "use the config").
pub fn parse_setpoint_flags(flags: &[String]) -> CliResult<Option<Vec<SetpointClass>>> {
    if flags.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(flags.len());
    for flag in flags {
        out.push(
            SetpointClass::parse(flag)
                .ok_or_else(|| CliError::Config(format!("unknown setpoint {flag:?}")))?,
        );
    }
    Ok(Some(out))
}
