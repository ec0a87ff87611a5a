//! `forward-sim`: roll one fitted parameter set forward over a test window
//! and write the prediction trace.
//!
//! The prediction follows the evaluation-cell protocol: the reference truth
//! for the scenario is regenerated (noiseless), and the reduced model
//! starts from a uniform house at the truth's first output sample.

use std::path::PathBuf;
use std::time::Instant;

use chrono::Datelike;

use rctherm_core::evaluate::{resolve_season_mode, truth_run, SetpointClass};
use rctherm_core::models::ModelOrder;
use rctherm_core::simulate::{forward_simulate, initial_state, ThermostatConfig};
use rctherm_core::timeseries::Season;

use crate::csvio::write_trace_csv;
use crate::error::{CliError, CliResult, Completion};
use crate::fitio::read_fit;
use crate::manifest::RunManifest;

use super::Context;

#[derive(Debug, Clone)]
pub struct ForwardSimArgs {
    /// Fit document produced by `estimate` or `evaluate`.
    pub result: PathBuf,
    pub test_season: String,
    pub setpoint: String,
    /// Window length, days.
    pub days: u32,
    /// Expected model order; rejected if the fit disagrees.
    pub order: Option<String>,
}

pub fn run(ctx: &Context, args: &ForwardSimArgs) -> CliResult<Completion> {
    let config = &ctx.config;
    let started = Instant::now();

    let doc = read_fit(&args.result)?;
    let fit = doc.to_result()?;
    if let Some(expected) = &args.order {
        let expected = ModelOrder::parse(expected)
            .ok_or_else(|| CliError::Config(format!("unknown order {expected:?}")))?;
        if expected != fit.theta_hat.order() {
            return Err(CliError::Config(format!(
                "fit file holds an {} parameter set, not {}",
                fit.theta_hat.order(),
                expected
            )));
        }
    }
    let season = Season::parse(&args.test_season)
        .ok_or_else(|| CliError::Config(format!("unknown season {:?}", args.test_season)))?;
    let setpoint = SetpointClass::parse(&args.setpoint)
        .ok_or_else(|| CliError::Config(format!("unknown setpoint {:?}", args.setpoint)))?;
    if args.days == 0 {
        return Err(CliError::Config("days must be at least 1".into()));
    }

    let weather = ctx.resolve_weather()?;
    let window = season.window(weather.start().year());
    let table = weather.slice_window(&window, args.days, 0)?;
    let mode = resolve_season_mode(&weather, season, setpoint.deg_c(), config.thermostat_mode()?)
        .map_err(CliError::Config)?;

    let theta_truth = config.truth_theta()?;
    let exo = config.exogenous();
    let elec = config.electrical();
    let thermostat = ThermostatConfig {
        setpoint_c: setpoint.deg_c(),
        deadband_half_width_k: config.thermostat.deadband_half_width_k,
        mode,
    };
    let truth =
        truth_run(&theta_truth, &table, &exo, &elec, &thermostat).map_err(CliError::Config)?;
    let x0 = initial_state(fit.theta_hat.order(), truth.y[0])?;
    let prediction = forward_simulate(&fit.theta_hat, &table, &exo, &thermostat, &elec, &x0)?;

    let name = format!(
        "prediction_{}_{}_{}_{}.csv",
        doc.method.to_lowercase(),
        doc.order.to_lowercase(),
        season.label().to_lowercase(),
        setpoint.label().to_lowercase()
    );
    write_trace_csv(&ctx.out_dir.join(&name), &prediction)?;

    let mut manifest = RunManifest::new("forward-sim", &config.hash(), config.seed);
    manifest.record_file(&ctx.out_dir, &name)?;
    manifest.record_stage("forward-sim", started);
    manifest.write(&ctx.out_dir)?;
    println!(
        "{name}: {} rows over {} days ({} {})",
        prediction.len(),
        args.days,
        season.label(),
        setpoint.label()
    );
    Ok(Completion::Clean)
}
