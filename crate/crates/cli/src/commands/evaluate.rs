//! `evaluate`: run the full robustness matrix and write `matrix.csv`,
//! `marginals.csv`, fit documents, and (optionally) per-cell traces.
//!
//! Fits found on disk under the same configuration hash are reused;
//! everything else is fitted on demand. Parameter sets run concurrently up
//! to `jobs`; cell results merge into ordered maps, so the written files
//! are identical regardless of thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use chrono::Datelike;
use rayon::prelude::*;

use rctherm_core::estimate::EstimationResult;
use rctherm_core::evaluate::{
    all_marginals, resolve_season_mode, run_parameter_set, score_parameter_set, truth_run,
    EvaluationMatrix, FitKey, MatrixSpec, ParameterSetOutcome, ScenarioKey,
};
use rctherm_core::models::{HouseElectricalParams, ParameterVector};
use rctherm_core::simulate::{forward_simulate, initial_state, SimulationTrace};
use rctherm_core::timeseries::{ExogenousConfig, TimeSeriesTable};

use crate::csvio::{write_cell_trace_csv, write_marginals_csv, write_matrix_csv};
use crate::error::{CliError, CliResult, Completion};
use crate::fitio::{fit_file_name, fit_path, load_matching_fit, write_fit, FitDocument};
use crate::manifest::RunManifest;

use super::{Context, MARGINALS_FILE, MATRIX_FILE};

/// `trace_nls_sm1_summer_winter_18c.csv` and friends.
pub fn cell_trace_name(key: &ScenarioKey) -> String {
    format!(
        "trace_{}_{}_{}_{}_{}.csv",
        key.method.label().to_lowercase(),
        key.order.label().to_lowercase(),
        key.train_season.label().to_lowercase(),
        key.test_season.label().to_lowercase(),
        key.setpoint.label().to_lowercase()
    )
}

/// Reruns the truth and prediction for one scored cell, following the
/// scoring protocol exactly.
fn regenerate_cell(
    weather: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
    scenario: &ScenarioKey,
    theta_hat: &ParameterVector,
) -> Result<(SimulationTrace, SimulationTrace), String> {
    let window = scenario.test_season.window(weather.start().year());
    let table = weather
        .slice_window(&window, spec.test_days, 0)
        .map_err(|e| format!("{e}"))?;
    let mode = resolve_season_mode(
        weather,
        scenario.test_season,
        scenario.setpoint.deg_c(),
        spec.mode,
    )?;
    let thermostat = spec.thermostat(scenario.setpoint.deg_c(), mode);
    let truth = truth_run(theta_truth, &table, exo, elec, &thermostat)?;
    let x0 = initial_state(theta_hat.order(), truth.y[0]).map_err(|e| format!("{e}"))?;
    let pred = forward_simulate(theta_hat, &table, exo, &thermostat, elec, &x0)
        .map_err(|e| format!("{e}"))?;
    Ok((truth, pred))
}

pub fn run(ctx: &Context) -> CliResult<Completion> {
    let config = &ctx.config;
    let setup_started = Instant::now();
    let weather = ctx.resolve_weather()?;
    let spec = config.matrix_spec()?;
    let theta_truth = config.truth_theta()?;
    let exo = config.exogenous();
    let elec = config.electrical();
    let config_hash = config.hash();
    let keys = spec.fit_keys();

    let mut manifest = RunManifest::new("evaluate", &config_hash, config.seed);
    manifest.record_stage("setup", setup_started);

    // Fits from an earlier run count only when produced under this exact
    // configuration.
    let load_started = Instant::now();
    let mut preloaded: BTreeMap<FitKey, EstimationResult> = BTreeMap::new();
    for &key in &keys {
        if let Some(fit) = load_matching_fit(&ctx.out_dir, key, &config_hash)? {
            preloaded.insert(key, fit);
        }
    }
    manifest.record_stage("load-fits", load_started);

    let sweep_started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<ParameterSetOutcome> = pool.install(|| {
        keys.par_iter()
            .map(|&key| match preloaded.get(&key) {
                Some(fit) => ParameterSetOutcome {
                    fit_key: key,
                    fit: Ok(fit.clone()),
                    cells: score_parameter_set(
                        &weather,
                        &theta_truth,
                        &exo,
                        &elec,
                        &spec,
                        key,
                        &fit.theta_hat,
                    ),
                },
                None => run_parameter_set(&weather, &theta_truth, &exo, &elec, &spec, key),
            })
            .collect()
    });
    manifest.record_stage("sweep", sweep_started);

    let mut matrix = EvaluationMatrix::new();
    for outcome in outcomes {
        matrix.merge(outcome);
    }

    let write_started = Instant::now();
    let mut failed_fits = 0usize;
    for (&key, fit) in &matrix.fits {
        match fit {
            Ok(result) => {
                let doc = FitDocument::from_result(key, result, &config_hash);
                write_fit(&fit_path(&ctx.out_dir, key), &doc)?;
                manifest.record_file(&ctx.out_dir, &fit_file_name(key))?;
            }
            Err(message) => {
                eprintln!("fit {key} failed: {message}");
                failed_fits += 1;
            }
        }
    }

    write_matrix_csv(&ctx.out_dir.join(MATRIX_FILE), &matrix)?;
    manifest.record_file(&ctx.out_dir, MATRIX_FILE)?;

    match all_marginals(&matrix) {
        Ok(rows) => {
            write_marginals_csv(&ctx.out_dir.join(MARGINALS_FILE), &rows)?;
            manifest.record_file(&ctx.out_dir, MARGINALS_FILE)?;
        }
        // With zero scored cells the marginal tables do not exist; the
        // matrix file still records every failure.
        Err(e) => eprintln!("marginals unavailable: {e}"),
    }

    if config.matrix.emit_cell_traces {
        for (scenario, _, _) in matrix.scored() {
            let Some(Ok(fit)) = matrix.fits.get(&scenario.fit_key()) else {
                continue;
            };
            match regenerate_cell(
                &weather,
                &theta_truth,
                &exo,
                &elec,
                &spec,
                scenario,
                &fit.theta_hat,
            ) {
                Ok((truth, pred)) => {
                    let name = cell_trace_name(scenario);
                    write_cell_trace_csv(&ctx.out_dir.join(&name), &truth, &pred)?;
                    manifest.record_file(&ctx.out_dir, &name)?;
                }
                Err(message) => eprintln!("trace for {scenario} unavailable: {message}"),
            }
        }
    }
    manifest.record_stage("write", write_started);
    manifest.write(&ctx.out_dir)?;

    let n_scored = matrix.scored().count();
    let n_failed = matrix.n_failed();
    println!(
        "{} fits ({} failed), {} cells scored, {} cells failed",
        matrix.fits.len(),
        failed_fits,
        n_scored,
        n_failed
    );
    if n_failed == 0 {
        Ok(Completion::Clean)
    } else {
        Ok(Completion::WithFailures { failed: n_failed })
    }
}
