//! `generate`: write the weather table and one year-long truth trace per
//! setpoint.
//!
//! Each year file is four season runs back to back. Every season resolves
//! its own thermostat mode (in `auto`) and restarts the truth simulation
//! from a uniform house at the setpoint, so any sub-window of a season in
//! the file matches an in-memory run over the same window exactly when
//! measurement noise is disabled.

use std::time::Instant;

use chrono::Datelike;

use rctherm_core::evaluate::{resolve_season_mode, SetpointClass};
use rctherm_core::models::ModelOrder;
use rctherm_core::rng::derive_seed;
use rctherm_core::simulate::{simulate_truth, NoiseConfig, SimulationTrace, ThermostatConfig};
use rctherm_core::timeseries::Season;

use crate::csvio::{write_trace_rows, write_weather_csv, TraceRow};
use crate::error::{CliError, CliResult, Completion};
use crate::manifest::RunManifest;

use super::{truth_file_name, Context, WEATHER_FILE};

#[derive(Debug, Clone, Default)]
pub struct GenerateArgs {
    /// Setpoints to generate; empty means all configured setpoints.
    pub setpoints: Vec<String>,
}

/// Seed label for the sensor-noise stream of one truth file.
fn truth_noise_label(season: Season, setpoint: SetpointClass) -> String {
    format!("truth:{}:{}", season.label(), setpoint.label())
}

pub fn run(ctx: &Context, args: &GenerateArgs) -> CliResult<Completion> {
    let config = &ctx.config;
    let started = Instant::now();
    // Resolving the weather source comes before any output is written, so a
    // missing input file aborts with no partial artifacts.
    let weather = ctx.resolve_weather()?;
    let theta = config.truth_theta()?;
    let exo = config.exogenous();
    let elec = config.electrical();
    let base_mode = config.thermostat_mode()?;
    let setpoints = match super::parse_setpoint_flags(&args.setpoints)? {
        Some(list) => list,
        None => config.setpoints()?,
    };

    let mut manifest = RunManifest::new("generate", &config.hash(), config.seed);
    manifest.record_stage("resolve-weather", started);

    // Simulate everything first, then write: an invalid configuration
    // surfaces before any file exists.
    let year = weather.start().year();
    let mut per_setpoint: Vec<(SetpointClass, Vec<SimulationTrace>)> = Vec::new();
    let sim_started = Instant::now();
    for &setpoint in &setpoints {
        let mut season_runs = Vec::with_capacity(Season::ALL.len());
        for season in Season::ALL {
            let window = season.window(year);
            let days = window.days().max(0) as u32;
            let table = weather.slice_window(&window, days, 0)?;
            let mode = resolve_season_mode(&weather, season, setpoint.deg_c(), base_mode)
                .map_err(CliError::Config)?;
            let mut thermostat = ThermostatConfig::new(setpoint.deg_c(), mode);
            thermostat.deadband_half_width_k = config.thermostat.deadband_half_width_k;
            let noise = NoiseConfig {
                measurement_std_k: config.truth.measurement_noise_std_k,
                process_std_k: config.truth.process_noise_std_k,
                seed: derive_seed(config.seed, &truth_noise_label(season, setpoint)),
            };
            let x0 = vec![setpoint.deg_c(); ModelOrder::Sm4.n_states()];
            let trace = simulate_truth(&theta, &table, &exo, &thermostat, &elec, &noise, &x0)?;
            season_runs.push(trace);
        }
        per_setpoint.push((setpoint, season_runs));
    }
    manifest.record_stage("simulate", sim_started);

    let write_started = Instant::now();
    let weather_path = ctx.out_dir.join(WEATHER_FILE);
    write_weather_csv(&weather_path, &weather, &config.input)?;
    manifest.record_file(&ctx.out_dir, WEATHER_FILE)?;

    for (setpoint, season_runs) in &per_setpoint {
        let name = truth_file_name(*setpoint);
        let path = ctx.out_dir.join(&name);
        let n_states = ModelOrder::Sm4.n_states();
        let rows = season_runs.iter().flat_map(|trace| {
            (0..trace.len()).map(move |k| TraceRow {
                timestamp: trace.start
                    + chrono::Duration::seconds(k as i64 * i64::from(trace.step_seconds)),
                states: &trace.states[k * n_states..(k + 1) * n_states],
                y: trace.y[k],
                hvac_on: trace.hvac_on[k],
                q_hvac: trace.q_hvac[k],
                p_hvac: trace.p_hvac[k],
                p: trace.p[k],
                q_reactive: trace.q_reactive[k],
                mode: trace.resolved_mode,
            })
        });
        write_trace_rows(&path, ModelOrder::Sm4, rows)?;
        manifest.record_file(&ctx.out_dir, &name)?;
    }
    manifest.record_stage("write", write_started);
    manifest.write(&ctx.out_dir)?;
    Ok(Completion::Clean)
}
