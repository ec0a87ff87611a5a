//! Closed-loop thermal simulation under a hysteresis thermostat.
//!
//! Both the four-state truth generator and the reduced-order forward
//! simulator run the same loop: at each sample the controller reads the
//! true zone temperature, latches the HVAC relay against the deadband, and
//! the state advances one forward-Euler step with inputs held constant over
//! the interval (zero-order hold). Measurement noise, when configured, is
//! added only to the recorded output — never to the propagated state or the
//! controller's input.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use chrono::NaiveDateTime;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::models::{
    assemble, discretize, hvac_power, reactive_power, total_power, write_disturbances,
    DiscreteModel, HouseElectricalParams, ModelOrder, ParameterVector, MAX_DISTURBANCES,
    MAX_STATES,
};
use crate::rng::{stage_rng, standard_normal};
use crate::timeseries::{
    exogenous_records, ExogenousConfig, TimeSeriesTable, COL_AMBIENT, COL_LOAD,
};

/// States beyond this magnitude (°C) abort the run as divergence.
const DIVERGENCE_LIMIT: f64 = 1.0e6;

/// Thermostat operating mode. `Auto` resolves once per run from the mean
/// ambient temperature against the setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvacMode {
    Cooling,
    Heating,
    Auto,
}

impl HvacMode {
    pub fn label(self) -> &'static str {
        match self {
            HvacMode::Cooling => "cooling",
            HvacMode::Heating => "heating",
            HvacMode::Auto => "auto",
        }
    }

    pub fn parse(text: &str) -> Option<HvacMode> {
        [HvacMode::Cooling, HvacMode::Heating, HvacMode::Auto]
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(text.trim()))
    }
}

/// Bang-bang thermostat settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermostatConfig {
    /// Target zone temperature, °C.
    pub setpoint_c: f64,
    /// Hysteresis half-width δ, K: the relay toggles at setpoint ± δ.
    pub deadband_half_width_k: f64,
    pub mode: HvacMode,
}

impl ThermostatConfig {
    pub fn new(setpoint_c: f64, mode: HvacMode) -> Self {
        Self {
            setpoint_c,
            deadband_half_width_k: 0.5,
            mode,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.setpoint_c.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "setpoint = {}",
                self.setpoint_c
            )));
        }
        if !(self.deadband_half_width_k > 0.0) || !self.deadband_half_width_k.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "deadband half-width = {}",
                self.deadband_half_width_k
            )));
        }
        Ok(())
    }

    /// Resolves `Auto` against the mean ambient temperature.
    pub fn resolve_mode(&self, mean_ambient_c: f64) -> HvacMode {
        match self.mode {
            HvacMode::Auto => {
                if mean_ambient_c > self.setpoint_c {
                    HvacMode::Cooling
                } else {
                    HvacMode::Heating
                }
            }
            fixed => fixed,
        }
    }
}

/// Sensor and process noise injected by the truth generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation added to the recorded output, K.
    pub measurement_std_k: f64,
    /// Standard deviation added to every state per step, K.
    pub process_std_k: f64,
    pub seed: u64,
}

impl NoiseConfig {
    /// Output noise of 0.05 K, no process noise.
    pub fn measurement_only(seed: u64) -> Self {
        Self {
            measurement_std_k: 0.05,
            process_std_k: 0.0,
            seed,
        }
    }

    pub fn none(seed: u64) -> Self {
        Self {
            measurement_std_k: 0.0,
            process_std_k: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.measurement_std_k >= 0.0) || !(self.process_std_k >= 0.0) {
            return Err(SimError::InvalidConfig("negative noise std".into()));
        }
        Ok(())
    }
}

/// Per-step record of one closed-loop run, aligned to the driving table.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub order: ModelOrder,
    pub start: NaiveDateTime,
    pub step_seconds: u32,
    /// Mode the controller actually ran in (never `Auto`).
    pub resolved_mode: HvacMode,
    /// Flattened states, row-major: `states[k * n_states + i]`.
    pub states: Vec<f64>,
    /// Measured output: true zone temperature plus sensor noise, °C.
    pub y: Vec<f64>,
    pub hvac_on: Vec<bool>,
    /// Thermal rate, W: ≤ 0 in cooling, ≥ 0 in heating.
    pub q_hvac: Vec<f64>,
    /// HVAC electrical draw, W.
    pub p_hvac: Vec<f64>,
    /// Whole-house active power, W.
    pub p: Vec<f64>,
    /// Whole-house reactive power, var.
    pub q_reactive: Vec<f64>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// State `i` at step `k`.
    pub fn state(&self, k: usize, i: usize) -> f64 {
        self.states[k * self.order.n_states() + i]
    }

    /// Noiseless zone-temperature trajectory.
    pub fn t_z_series(&self) -> Vec<f64> {
        let n = self.order.n_states();
        self.states.iter().step_by(n).copied().collect()
    }
}

/// All states start at the measured output: a uniform-temperature house.
pub fn initial_state(order: ModelOrder, y0: f64) -> Result<Vec<f64>, SimError> {
    if !y0.is_finite() {
        return Err(SimError::InvalidInitialState(format!("y0 = {y0}")));
    }
    Ok(vec![y0; order.n_states()])
}

struct Hysteresis {
    on: bool,
    mode: HvacMode,
    on_edge: f64,
    off_edge: f64,
    q_rated: f64,
}

impl Hysteresis {
    fn new(thermostat: &ThermostatConfig, mode: HvacMode, q_rated: f64) -> Self {
        let sp = thermostat.setpoint_c;
        let delta = thermostat.deadband_half_width_k;
        // Cooling: on above the band, off below it; heating mirrored.
        let (on_edge, off_edge) = match mode {
            HvacMode::Cooling => (sp + delta, sp - delta),
            HvacMode::Heating => (sp - delta, sp + delta),
            HvacMode::Auto => unreachable!("mode resolved before control"),
        };
        Self {
            on: false,
            mode,
            on_edge,
            off_edge,
            q_rated,
        }
    }

    /// Latches against the true zone temperature; returns Q_HVAC.
    fn command(&mut self, t_z: f64) -> f64 {
        match self.mode {
            HvacMode::Cooling => {
                if t_z > self.on_edge {
                    self.on = true;
                } else if t_z < self.off_edge {
                    self.on = false;
                }
                if self.on {
                    -self.q_rated
                } else {
                    0.0
                }
            }
            HvacMode::Heating => {
                if t_z < self.on_edge {
                    self.on = true;
                } else if t_z > self.off_edge {
                    self.on = false;
                }
                if self.on {
                    self.q_rated
                } else {
                    0.0
                }
            }
            HvacMode::Auto => unreachable!(),
        }
    }
}

struct NoiseStreams {
    measurement: ChaCha8Rng,
    process: ChaCha8Rng,
    measurement_std: f64,
    process_std: f64,
}

impl NoiseStreams {
    fn new(noise: &NoiseConfig) -> Self {
        Self {
            measurement: stage_rng(noise.seed, "measurement"),
            process: stage_rng(noise.seed, "process"),
            measurement_std: noise.measurement_std_k,
            process_std: noise.process_std_k,
        }
    }
}

fn run_closed_loop(
    dm: &DiscreteModel,
    table: &TimeSeriesTable,
    exo: &ExogenousConfig,
    thermostat: &ThermostatConfig,
    elec: &HouseElectricalParams,
    mut noise: Option<NoiseStreams>,
    x0: &[f64],
) -> Result<SimulationTrace, SimError> {
    thermostat.validate()?;
    elec.validate()?;
    let order = dm.order;
    let n = order.n_states();
    if x0.len() != n || x0.iter().any(|v| !v.is_finite()) {
        return Err(SimError::InvalidInitialState(format!(
            "expected {n} finite states, got {:?}",
            x0
        )));
    }

    let records = exogenous_records(table, exo).map_err(|e| SimError::InvalidConfig(format!("{e}")))?;
    let p_other = table
        .column(COL_LOAD)
        .map_err(|e| SimError::InvalidConfig(format!("{e}")))?;
    let ambient = table
        .column(COL_AMBIENT)
        .map_err(|e| SimError::InvalidConfig(format!("{e}")))?;
    let mean_ambient = ambient.iter().sum::<f64>() / ambient.len() as f64;
    let mode = thermostat.resolve_mode(mean_ambient);
    let mut relay = Hysteresis::new(thermostat, mode, elec.q_ac_rated_w);

    let len = table.len();
    let mut trace = SimulationTrace {
        order,
        start: table.start(),
        step_seconds: table.step_seconds(),
        resolved_mode: mode,
        states: Vec::with_capacity(len * n),
        y: Vec::with_capacity(len),
        hvac_on: Vec::with_capacity(len),
        q_hvac: Vec::with_capacity(len),
        p_hvac: Vec::with_capacity(len),
        p: Vec::with_capacity(len),
        q_reactive: Vec::with_capacity(len),
    };

    let mut x = [0.0; MAX_STATES];
    let mut x_next = [0.0; MAX_STATES];
    let mut w = [0.0; MAX_DISTURBANCES];
    x[..n].copy_from_slice(x0);

    for k in 0..len {
        let t_z = x[0];
        if !t_z.is_finite() || t_z.abs() > DIVERGENCE_LIMIT {
            return Err(SimError::Diverged { step: k });
        }
        let q = relay.command(t_z);
        let p_h = hvac_power(q, elec);
        let p_total = total_power(p_h, p_other[k]);

        let measured = match &mut noise {
            Some(streams) => t_z + streams.measurement_std * standard_normal(&mut streams.measurement),
            None => t_z,
        };

        trace.states.extend_from_slice(&x[..n]);
        trace.y.push(measured);
        trace.hvac_on.push(relay.on);
        trace.q_hvac.push(q);
        trace.p_hvac.push(p_h);
        trace.p.push(p_total);
        trace.q_reactive.push(reactive_power(p_total, elec.pf));

        if k + 1 < len {
            write_disturbances(order, &records[k], &mut w);
            dm.step(&x[..n], q, &w[..order.n_disturbances()], &mut x_next[..n]);
            if let Some(streams) = &mut noise {
                for state in x_next[..n].iter_mut() {
                    *state += streams.process_std * standard_normal(&mut streams.process);
                }
            }
            x[..n].copy_from_slice(&x_next[..n]);
        }
    }

    Ok(trace)
}

/// Generates ground-truth data: the four-state model under hysteresis
/// control, with optional sensor/process noise. Deterministic for a fixed
/// seed.
pub fn simulate_truth(
    theta_sm4: &ParameterVector,
    table: &TimeSeriesTable,
    exo: &ExogenousConfig,
    thermostat: &ThermostatConfig,
    elec: &HouseElectricalParams,
    noise: &NoiseConfig,
    x0: &[f64],
) -> Result<SimulationTrace, SimError> {
    noise.validate()?;
    let dm = discretize(&assemble(theta_sm4), f64::from(table.step_seconds()))?;
    run_closed_loop(
        &dm,
        table,
        exo,
        thermostat,
        elec,
        Some(NoiseStreams::new(noise)),
        x0,
    )
}

/// Forward-simulates a fitted reduced-order model under the same control
/// law, with no injected noise.
pub fn forward_simulate(
    theta_hat: &ParameterVector,
    table: &TimeSeriesTable,
    exo: &ExogenousConfig,
    thermostat: &ThermostatConfig,
    elec: &HouseElectricalParams,
    x0: &[f64],
) -> Result<SimulationTrace, SimError> {
    let dm = discretize(&assemble(theta_hat), f64::from(table.step_seconds()))?;
    run_closed_loop(&dm, table, exo, thermostat, elec, None, x0)
}

/// Corrupts the recorded output channel of an existing trace with fresh
/// i.i.d. Gaussian noise. The states, relay decisions, and electrical
/// series are left untouched, so the result is exactly "the same run seen
/// through a noisier sensor".
pub fn add_measurement_noise(trace: &mut SimulationTrace, std_k: f64, seed: u64) {
    let mut rng = stage_rng(seed, "measurement");
    for y in trace.y.iter_mut() {
        *y += std_k * standard_normal(&mut rng);
    }
}
