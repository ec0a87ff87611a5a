//! `estimate`: fit reduced-order parameter sets on 21-day training windows
//! and write one fit document per (method, order, season).
//!
//! Training data normally comes from an in-memory truth run. When
//! `input.truth_csv` is set, the training window is cut from that file
//! instead, which exercises the ingestion path end to end.

use std::time::Instant;

use chrono::Datelike;

use rctherm_core::estimate::{estimate, EstimationProblem, EstimationResult, TrainingData};
use rctherm_core::evaluate::{fit_parameter_set, FitKey, MatrixSpec};
use rctherm_core::rng::derive_seed;
use rctherm_core::timeseries::{ExogenousConfig, TimeSeriesTable};

use crate::csvio::{read_trace_csv, TraceFile};
use crate::error::{CliError, CliResult, Completion};
use crate::fitio::{fit_path, write_fit, FitDocument};
use crate::manifest::RunManifest;

use super::Context;

#[derive(Debug, Clone, Default)]
pub struct EstimateArgs {
    /// Method subset; empty means all configured methods.
    pub methods: Vec<String>,
    /// Order subset; empty means all configured orders.
    pub orders: Vec<String>,
    /// Training-season subset; empty means all configured seasons.
    pub seasons: Vec<String>,
}

/// Applies the subset flags on top of the config (flags win).
fn apply_subsets(ctx: &Context, args: &EstimateArgs) -> CliResult<MatrixSpec> {
    let mut config = ctx.config.clone();
    if !args.methods.is_empty() {
        config.estimation.methods = args.methods.clone();
    }
    if !args.orders.is_empty() {
        config.estimation.orders = args.orders.clone();
    }
    if !args.seasons.is_empty() {
        config.matrix.train_seasons = args.seasons.clone();
    }
    config.matrix_spec()
}

/// Fits one key using training data sliced from a truth file.
///
/// Mirrors the in-memory protocol exactly except for the data source; with
/// measurement noise disabled in `generate` the two are bit-identical.
fn fit_from_file(
    file: &TraceFile,
    weather: &TimeSeriesTable,
    exo: &ExogenousConfig,
    spec: &MatrixSpec,
    key: FitKey,
) -> Result<EstimationResult, String> {
    if file.order.n_states() != 4 {
        return Err(format!(
            "truth file holds a {} trace; training data must come from the four-state truth",
            file.order
        ));
    }
    let window = key.train_season.window(weather.start().year());
    let offset_steps = window
        .start
        .signed_duration_since(file.start)
        .num_seconds()
        .checked_div(i64::from(file.step_seconds))
        .unwrap_or(-1);
    if offset_steps < 0 {
        return Err(format!(
            "truth file starts {} — after the {} window",
            file.start, key.train_season
        ));
    }
    let steps_per_day = 86_400 / file.step_seconds as usize;
    let count = spec.train_days as usize * steps_per_day;
    let trace = file.slice(offset_steps as usize, count)?;
    let train_table = weather
        .slice_window(&window, spec.train_days, 0)
        .map_err(|e| format!("training window: {e}"))?;
    let data = TrainingData::from_trace(key.order, &trace, &train_table, exo)
        .map_err(|e| format!("{e}"))?;
    let mut problem = EstimationProblem::new(data);
    problem.bounds = spec.bounds_for(key.order);
    problem.p0_var = spec.p0_var;
    problem.q_var = spec.q_var;
    problem.r_var = spec.r_var;
    let mut opts = spec.optimize.clone();
    opts.seed = derive_seed(spec.optimize.seed, &format!("fit:{key}"));
    estimate(key.method, &problem, &opts).map_err(|e| format!("{e}"))
}

pub fn run(ctx: &Context, args: &EstimateArgs) -> CliResult<Completion> {
    let config = &ctx.config;
    let started = Instant::now();
    let weather = ctx.resolve_weather()?;
    let spec = apply_subsets(ctx, args)?;
    let theta_truth = config.truth_theta()?;
    let exo = config.exogenous();
    let elec = config.electrical();
    let config_hash = config.hash();

    // A corrupted or missing truth file fails the whole command up front
    // (usage error), unlike per-fit optimization failures below.
    let truth_file = match &config.input.truth_csv {
        Some(path) => Some(read_trace_csv(path)?),
        None => None,
    };

    let mut manifest = RunManifest::new("estimate", &config_hash, config.seed);
    manifest.record_stage("setup", started);

    let fit_started = Instant::now();
    let mut failures: Vec<(FitKey, String)> = Vec::new();
    for key in spec.fit_keys() {
        let result = match &truth_file {
            Some(file) => fit_from_file(file, &weather, &exo, &spec, key),
            None => fit_parameter_set(&weather, &theta_truth, &exo, &elec, &spec, key),
        };
        match result {
            Ok(fit) => {
                let doc = FitDocument::from_result(key, &fit, &config_hash);
                let path = fit_path(&ctx.out_dir, key);
                write_fit(&path, &doc)?;
                let name = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .ok_or_else(|| CliError::Config("bad fit file name".into()))?
                    .to_string();
                manifest.record_file(&ctx.out_dir, &name)?;
            }
            Err(message) => {
                eprintln!("fit {key} failed: {message}");
                failures.push((key, message));
            }
        }
    }
    manifest.record_stage("fit", fit_started);
    manifest.write(&ctx.out_dir)?;

    if failures.is_empty() {
        Ok(Completion::Clean)
    } else {
        Ok(Completion::WithFailures {
            failed: failures.len(),
        })
    }
}
