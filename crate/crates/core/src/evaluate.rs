//! Forward-simulation scoring and the robustness evaluation matrix.
//!
//! Accuracy is reported as `100 − MAPE` (mean absolute percentage error).
//! Zone temperature is scored sample-by-sample at the native cadence; the
//! binary HVAC electrical draw is first averaged over three-hour bins so
//! the metric compares duty cycles rather than relay phase. The full
//! robustness study fits every (method, order, train-season) combination
//! on a 21-day window at 22 °C and replays each fitted model across every
//! (test-season, setpoint) scenario against freshly generated truth.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::Datelike;

use crate::error::EvalError;
use crate::estimate::{
    estimate, EstimationMethod, EstimationProblem, EstimationResult, OptimizeOptions,
    TrainingData,
};
use crate::models::{HouseElectricalParams, ModelOrder, ParamKind, ParameterVector};
use crate::rng::derive_seed;
use crate::simulate::{
    add_measurement_noise, forward_simulate, initial_state, simulate_truth, HvacMode,
    NoiseConfig, SimulationTrace, ThermostatConfig,
};
use crate::timeseries::{ExogenousConfig, Season, TimeSeriesTable, COL_AMBIENT};

/// Three-hour aggregation window for the HVAC power signal.
pub const PHVAC_BIN_SECONDS: u32 = 10_800;
/// Bins whose truth mean lies at or below this level (W) are excluded from
/// the power MAPE; a strictly zero truth bin carries no percentage scale.
pub const PHVAC_ZERO_FLOOR_W: f64 = 1.0;

/// MAPE/accuracy pair for one scored series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyScore {
    /// Mean absolute percentage error over the included points, percent.
    pub mape: f64,
    /// `100 − mape`, percent.
    pub accuracy: f64,
    /// Points that entered the mean.
    pub n_points_used: usize,
    /// Points skipped because the truth magnitude was at or below the floor.
    pub excluded_zero_bins: usize,
}

/// Mean absolute percentage error of `pred` against `truth`, excluding
/// points whose truth magnitude is ≤ `zero_floor`.
pub fn mape(truth: &[f64], pred: &[f64], zero_floor: f64) -> Result<AccuracyScore, EvalError> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if !(zero_floor >= 0.0) {
        return Err(EvalError::InvalidSpec(format!("zero_floor = {zero_floor}")));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (t, p) in truth.iter().zip(pred) {
        if t.abs() > zero_floor {
            sum += 100.0 * (t - p).abs() / t.abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(EvalError::AllPointsExcluded(truth.len()));
    }
    let mape = sum / used as f64;
    Ok(AccuracyScore {
        mape,
        accuracy: 100.0 - mape,
        n_points_used: used,
        excluded_zero_bins: truth.len() - used,
    })
}

/// A series reduced to fixed-duration bin means.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSeries {
    pub means: Vec<f64>,
    pub samples_per_bin: usize,
    /// Samples discarded from an incomplete trailing bin.
    pub dropped_samples: usize,
}

/// Averages a sampled series over complete bins of `bin_seconds`,
/// dropping (and counting) any trailing partial bin.
pub fn aggregate_phvac(
    series: &[f64],
    step_seconds: u32,
    bin_seconds: u32,
) -> Result<BinnedSeries, EvalError> {
    if step_seconds == 0 || bin_seconds == 0 || bin_seconds % step_seconds != 0 {
        return Err(EvalError::IncompatibleBin {
            bin_seconds,
            step_seconds,
        });
    }
    let samples_per_bin = (bin_seconds / step_seconds) as usize;
    let n_bins = series.len() / samples_per_bin;
    if n_bins == 0 {
        return Err(EvalError::InvalidSpec(format!(
            "{} samples cannot fill one {}-sample bin",
            series.len(),
            samples_per_bin
        )));
    }
    let mut means = Vec::with_capacity(n_bins);
    for bin in series.chunks_exact(samples_per_bin) {
        means.push(bin.iter().sum::<f64>() / samples_per_bin as f64);
    }
    Ok(BinnedSeries {
        means,
        samples_per_bin,
        dropped_samples: series.len() - n_bins * samples_per_bin,
    })
}

/// The three thermostat setpoints of the robustness study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetpointClass {
    Low,
    Normal,
    High,
}

impl SetpointClass {
    pub const ALL: [SetpointClass; 3] =
        [SetpointClass::Low, SetpointClass::Normal, SetpointClass::High];

    pub fn deg_c(self) -> f64 {
        match self {
            SetpointClass::Low => 18.0,
            SetpointClass::Normal => 22.0,
            SetpointClass::High => 26.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SetpointClass::Low => "18C",
            SetpointClass::Normal => "22C",
            SetpointClass::High => "26C",
        }
    }

    pub fn parse(text: &str) -> Option<SetpointClass> {
        let t = text.trim();
        SetpointClass::ALL
            .into_iter()
            .find(|s| s.label().eq_ignore_ascii_case(t) || t == s.label().trim_end_matches('C'))
    }
}

impl core::fmt::Display for SetpointClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// One fitted parameter set: which data it was trained on and by what.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FitKey {
    pub method: EstimationMethod,
    pub order: ModelOrder,
    pub train_season: Season,
}

impl core::fmt::Display for FitKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.method.label(),
            self.order.label(),
            self.train_season.label()
        )
    }
}

/// One evaluation cell: a fitted set replayed in one test scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScenarioKey {
    pub method: EstimationMethod,
    pub order: ModelOrder,
    pub train_season: Season,
    pub test_season: Season,
    pub setpoint: SetpointClass,
}

impl ScenarioKey {
    pub fn fit_key(&self) -> FitKey {
        FitKey {
            method: self.method,
            order: self.order,
            train_season: self.train_season,
        }
    }
}

impl core::fmt::Display for ScenarioKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.fit_key(),
            self.test_season.label(),
            self.setpoint.label()
        )
    }
}

/// Result of one matrix cell. Failures are recorded, not propagated, so a
/// bad cell never aborts its siblings.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Scored {
        t_z: AccuracyScore,
        p_hvac: AccuracyScore,
    },
    EstimationFailed(String),
    SimulationFailed(String),
    ScoringFailed(String),
}

impl CellOutcome {
    pub fn scores(&self) -> Option<(AccuracyScore, AccuracyScore)> {
        match self {
            CellOutcome::Scored { t_z, p_hvac } => Some((*t_z, *p_hvac)),
            _ => None,
        }
    }

    pub fn failure(&self) -> Option<(&'static str, &str)> {
        match self {
            CellOutcome::Scored { .. } => None,
            CellOutcome::EstimationFailed(m) => Some(("estimation", m)),
            CellOutcome::SimulationFailed(m) => Some(("simulation", m)),
            CellOutcome::ScoringFailed(m) => Some(("scoring", m)),
        }
    }
}

/// All scored and failed cells of one robustness sweep, plus the fitted
/// parameter sets behind them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationMatrix {
    pub cells: BTreeMap<ScenarioKey, CellOutcome>,
    pub fits: BTreeMap<FitKey, Result<EstimationResult, String>>,
}

impl EvaluationMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Iterates over successfully scored cells only.
    pub fn scored(
        &self,
    ) -> impl Iterator<Item = (&ScenarioKey, AccuracyScore, AccuracyScore)> + '_ {
        self.cells
            .iter()
            .filter_map(|(k, c)| c.scores().map(|(t, p)| (k, t, p)))
    }

    pub fn n_failed(&self) -> usize {
        self.cells.values().filter(|c| c.failure().is_some()).count()
    }

    pub fn merge(&mut self, outcome: ParameterSetOutcome) {
        self.fits.insert(outcome.fit_key, outcome.fit);
        for (key, cell) in outcome.cells {
            self.cells.insert(key, cell);
        }
    }
}

/// Sweep configuration: which combinations to run and with what protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub methods: Vec<EstimationMethod>,
    /// Reduced orders to fit (SM1 and/or SM2).
    pub orders: Vec<ModelOrder>,
    pub train_seasons: Vec<Season>,
    pub test_seasons: Vec<Season>,
    pub setpoints: Vec<SetpointClass>,
    /// Training window length, days (window starts at the season boundary).
    pub train_days: u32,
    /// Testing window length, days (also from the season boundary).
    pub test_days: u32,
    /// Every training run holds this setpoint, °C.
    pub train_setpoint_c: f64,
    /// Thermostat mode for truth and prediction runs.
    pub mode: HvacMode,
    /// Hysteresis half-width shared by every run, K.
    pub deadband_half_width_k: f64,
    /// Sensor noise added to the training output, K (0 disables).
    pub measurement_noise_std_k: f64,
    /// Root seed for training-noise streams.
    pub noise_seed: u64,
    /// Shared optimizer settings; the per-fit seed is derived from
    /// `optimize.seed` and the fit key.
    pub optimize: OptimizeOptions,
    pub p0_var: f64,
    pub q_var: f64,
    pub r_var: f64,
    /// Search box per parameter kind: (low, high) for resistances,
    /// capacitances, and gains respectively.
    pub r_bounds: (f64, f64),
    pub c_bounds: (f64, f64),
    pub gain_bounds: (f64, f64),
    pub zero_floor_w: f64,
    pub bin_seconds: u32,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        Self {
            methods: EstimationMethod::ALL.to_vec(),
            orders: vec![ModelOrder::Sm1, ModelOrder::Sm2],
            train_seasons: Season::ALL.to_vec(),
            test_seasons: Season::ALL.to_vec(),
            setpoints: SetpointClass::ALL.to_vec(),
            train_days: 21,
            test_days: 30,
            train_setpoint_c: 22.0,
            mode: HvacMode::Auto,
            deadband_half_width_k: 0.5,
            measurement_noise_std_k: 0.0,
            noise_seed: 0,
            optimize: OptimizeOptions::default(),
            p0_var: 1.0,
            q_var: 1e-4,
            r_var: 2.5e-3,
            r_bounds: (1e-4, 1.0),
            c_bounds: (1e4, 1e9),
            gain_bounds: (0.0, 5.0),
            zero_floor_w: PHVAC_ZERO_FLOOR_W,
            bin_seconds: PHVAC_BIN_SECONDS,
        }
    }
}

impl MatrixSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.methods.is_empty()
            || self.orders.is_empty()
            || self.train_seasons.is_empty()
            || self.test_seasons.is_empty()
            || self.setpoints.is_empty()
        {
            return Err(EvalError::InvalidSpec("empty sweep dimension".into()));
        }
        if self.orders.contains(&ModelOrder::Sm4) {
            return Err(EvalError::InvalidSpec(
                "only reduced orders (SM1, SM2) are fitted".into(),
            ));
        }
        if self.train_days == 0 || self.test_days == 0 {
            return Err(EvalError::InvalidSpec("zero-length window".into()));
        }
        if !self.train_setpoint_c.is_finite() || !(self.measurement_noise_std_k >= 0.0) {
            return Err(EvalError::InvalidSpec(
                "bad training setpoint or noise level".into(),
            ));
        }
        if !(self.deadband_half_width_k > 0.0) || !self.deadband_half_width_k.is_finite() {
            return Err(EvalError::InvalidSpec(format!(
                "deadband half-width = {}",
                self.deadband_half_width_k
            )));
        }
        if self.bin_seconds == 0 || !(self.zero_floor_w >= 0.0) {
            return Err(EvalError::InvalidSpec("bad scoring parameters".into()));
        }
        for (name, (lo, hi)) in [
            ("r_bounds", self.r_bounds),
            ("c_bounds", self.c_bounds),
            ("gain_bounds", self.gain_bounds),
        ] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(EvalError::InvalidSpec(format!("{name}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Thermostat for one run; `mode` must already be resolved.
    pub fn thermostat(&self, setpoint_c: f64, mode: HvacMode) -> ThermostatConfig {
        ThermostatConfig {
            setpoint_c,
            deadband_half_width_k: self.deadband_half_width_k,
            mode,
        }
    }

    /// Physical-space search box for one model order.
    pub fn bounds_for(&self, order: ModelOrder) -> Vec<(f64, f64)> {
        order
            .param_kinds()
            .iter()
            .map(|kind| match kind {
                ParamKind::Resistance => self.r_bounds,
                ParamKind::Capacitance => self.c_bounds,
                ParamKind::Gain => self.gain_bounds,
            })
            .collect()
    }

    /// Fit keys in deterministic sweep order.
    pub fn fit_keys(&self) -> Vec<FitKey> {
        let mut keys = Vec::new();
        for &method in &self.methods {
            for &order in &self.orders {
                for &train_season in &self.train_seasons {
                    keys.push(FitKey {
                        method,
                        order,
                        train_season,
                    });
                }
            }
        }
        keys
    }
}

/// Everything produced for one fitted parameter set: the fit itself and
/// its cells across all test scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSetOutcome {
    pub fit_key: FitKey,
    pub fit: Result<EstimationResult, String>,
    pub cells: Vec<(ScenarioKey, CellOutcome)>,
}

/// Resolves `Auto` thermostat mode against the mean ambient temperature of
/// the **entire** season window, not the particular sub-window simulated.
///
/// Every run inside one season therefore shares one mode, which keeps
/// 21-day training truth, 30-day test truth, and full-season reference
/// traces mutually consistent (a shorter window is then exactly a causal
/// prefix of a longer one).
pub fn resolve_season_mode(
    year_table: &TimeSeriesTable,
    season: Season,
    setpoint_c: f64,
    base: HvacMode,
) -> Result<HvacMode, String> {
    if base != HvacMode::Auto {
        return Ok(base);
    }
    let window = season.window(year_table.start().year());
    let days = window.days().max(0) as u32;
    let full = year_table
        .slice_window(&window, days, 0)
        .map_err(|e| format!("season window for mode resolution: {e}"))?;
    let ambient = full.column(COL_AMBIENT).map_err(|e| format!("{e}"))?;
    let mean = ambient.iter().sum::<f64>() / ambient.len() as f64;
    Ok(if mean > setpoint_c {
        HvacMode::Cooling
    } else {
        HvacMode::Heating
    })
}

/// Noiseless reference run for one scenario: `thermostat.mode` must already
/// be resolved; every state starts at the setpoint.
pub fn truth_run(
    theta_truth: &ParameterVector,
    table: &TimeSeriesTable,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    thermostat: &ThermostatConfig,
) -> Result<SimulationTrace, String> {
    let x0 = vec![thermostat.setpoint_c; theta_truth.order().n_states()];
    simulate_truth(
        theta_truth,
        table,
        exo,
        thermostat,
        elec,
        &NoiseConfig::none(0),
        &x0,
    )
    .map_err(|e| format!("{e}"))
}

/// Fits one parameter set on its 21-day training window.
pub fn fit_parameter_set(
    year_table: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
    key: FitKey,
) -> Result<EstimationResult, String> {
    let year = year_table.start().year();
    let window = key.train_season.window(year);
    let train_table = year_table
        .slice_window(&window, spec.train_days, 0)
        .map_err(|e| format!("training window: {e}"))?;
    let mode = resolve_season_mode(year_table, key.train_season, spec.train_setpoint_c, spec.mode)?;
    let thermostat = spec.thermostat(spec.train_setpoint_c, mode);
    let mut truth = truth_run(theta_truth, &train_table, exo, elec, &thermostat)?;
    if spec.measurement_noise_std_k > 0.0 {
        let label = format!("train-noise:{}", key.train_season.label());
        add_measurement_noise(
            &mut truth,
            spec.measurement_noise_std_k,
            derive_seed(spec.noise_seed, &label),
        );
    }
    let data = TrainingData::from_trace(key.order, &truth, &train_table, exo)
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

/// Scores one fitted set across every (test season, setpoint) scenario.
pub fn score_parameter_set(
    year_table: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
    key: FitKey,
    theta_hat: &ParameterVector,
) -> Vec<(ScenarioKey, CellOutcome)> {
    let year = year_table.start().year();
    let mut cells = Vec::new();
    for &test_season in &spec.test_seasons {
        for &setpoint in &spec.setpoints {
            let scenario = ScenarioKey {
                method: key.method,
                order: key.order,
                train_season: key.train_season,
                test_season,
                setpoint,
            };
            let cell = score_cell(
                year_table,
                theta_truth,
                exo,
                elec,
                spec,
                theta_hat,
                test_season,
                setpoint,
                year,
            );
            cells.push((scenario, cell));
        }
    }
    cells
}

#[allow(clippy::too_many_arguments)]
fn score_cell(
    year_table: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
    theta_hat: &ParameterVector,
    test_season: Season,
    setpoint: SetpointClass,
    year: i32,
) -> CellOutcome {
    let window = test_season.window(year);
    let test_table = match year_table.slice_window(&window, spec.test_days, 0) {
        Ok(t) => t,
        Err(e) => return CellOutcome::SimulationFailed(format!("test window: {e}")),
    };
    let mode = match resolve_season_mode(year_table, test_season, setpoint.deg_c(), spec.mode) {
        Ok(m) => m,
        Err(e) => return CellOutcome::SimulationFailed(e),
    };
    let thermostat = spec.thermostat(setpoint.deg_c(), mode);
    let truth = match truth_run(theta_truth, &test_table, exo, elec, &thermostat) {
        Ok(t) => t,
        Err(e) => return CellOutcome::SimulationFailed(e),
    };
    let x0 = match initial_state(theta_hat.order(), truth.y[0]) {
        Ok(x0) => x0,
        Err(e) => return CellOutcome::SimulationFailed(format!("{e}")),
    };
    let pred = match forward_simulate(theta_hat, &test_table, exo, &thermostat, elec, &x0) {
        Ok(t) => t,
        Err(e) => return CellOutcome::SimulationFailed(format!("{e}")),
    };

    let t_z_score = match mape(&truth.t_z_series(), &pred.t_z_series(), 0.0) {
        Ok(s) => s,
        Err(e) => return CellOutcome::ScoringFailed(format!("T_z: {e}")),
    };
    let truth_bins = match aggregate_phvac(&truth.p_hvac, truth.step_seconds, spec.bin_seconds) {
        Ok(b) => b,
        Err(e) => return CellOutcome::ScoringFailed(format!("P_HVAC bins: {e}")),
    };
    let pred_bins = match aggregate_phvac(&pred.p_hvac, pred.step_seconds, spec.bin_seconds) {
        Ok(b) => b,
        Err(e) => return CellOutcome::ScoringFailed(format!("P_HVAC bins: {e}")),
    };
    let p_score = match mape(&truth_bins.means, &pred_bins.means, spec.zero_floor_w) {
        Ok(s) => s,
        Err(e) => return CellOutcome::ScoringFailed(format!("P_HVAC: {e}")),
    };
    CellOutcome::Scored {
        t_z: t_z_score,
        p_hvac: p_score,
    }
}

/// Fit + score for one parameter set; the unit of parallel scheduling.
pub fn run_parameter_set(
    year_table: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
    key: FitKey,
) -> ParameterSetOutcome {
    let fit = fit_parameter_set(year_table, theta_truth, exo, elec, spec, key);
    let cells = match &fit {
        Ok(result) => score_parameter_set(
            year_table,
            theta_truth,
            exo,
            elec,
            spec,
            key,
            &result.theta_hat,
        ),
        Err(message) => {
            let mut cells = Vec::new();
            for &test_season in &spec.test_seasons {
                for &setpoint in &spec.setpoints {
                    let scenario = ScenarioKey {
                        method: key.method,
                        order: key.order,
                        train_season: key.train_season,
                        test_season,
                        setpoint,
                    };
                    cells.push((scenario, CellOutcome::EstimationFailed(message.clone())));
                }
            }
            cells
        }
    };
    ParameterSetOutcome {
        fit_key: key,
        fit,
        cells,
    }
}

/// Runs the whole sweep sequentially. Callers needing concurrency can map
/// [`MatrixSpec::fit_keys`] through [`run_parameter_set`] themselves and
/// merge the outcomes — the merge is order-independent.
pub fn run_matrix(
    year_table: &TimeSeriesTable,
    theta_truth: &ParameterVector,
    exo: &ExogenousConfig,
    elec: &HouseElectricalParams,
    spec: &MatrixSpec,
) -> Result<EvaluationMatrix, EvalError> {
    spec.validate()?;
    let mut matrix = EvaluationMatrix::new();
    for key in spec.fit_keys() {
        matrix.merge(run_parameter_set(
            year_table,
            theta_truth,
            exo,
            elec,
            spec,
            key,
        ));
    }
    Ok(matrix)
}

/// The grouping axes of the report, in the report's row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MarginalDimension {
    Method,
    Order,
    TrainSeason,
    TestSeason,
    Setpoint,
}

impl MarginalDimension {
    pub const ALL: [MarginalDimension; 5] = [
        MarginalDimension::Method,
        MarginalDimension::Order,
        MarginalDimension::TrainSeason,
        MarginalDimension::TestSeason,
        MarginalDimension::Setpoint,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MarginalDimension::Method => "method",
            MarginalDimension::Order => "order",
            MarginalDimension::TrainSeason => "train_season",
            MarginalDimension::TestSeason => "test_season",
            MarginalDimension::Setpoint => "setpoint",
        }
    }

    fn group_of(self, key: &ScenarioKey) -> String {
        match self {
            MarginalDimension::Method => key.method.label().to_string(),
            MarginalDimension::Order => key.order.label().to_string(),
            MarginalDimension::TrainSeason => key.train_season.label().to_string(),
            MarginalDimension::TestSeason => key.test_season.label().to_string(),
            MarginalDimension::Setpoint => key.setpoint.label().to_string(),
        }
    }

    /// Canonical group order for this axis.
    fn group_values(self) -> Vec<String> {
        match self {
            MarginalDimension::Method => EstimationMethod::ALL
                .iter()
                .map(|m| m.label().to_string())
                .collect(),
            MarginalDimension::Order => [ModelOrder::Sm1, ModelOrder::Sm2]
                .iter()
                .map(|o| o.label().to_string())
                .collect(),
            MarginalDimension::TrainSeason | MarginalDimension::TestSeason => Season::ALL
                .iter()
                .map(|s| s.label().to_string())
                .collect(),
            MarginalDimension::Setpoint => SetpointClass::ALL
                .iter()
                .map(|s| s.label().to_string())
                .collect(),
        }
    }
}

impl core::fmt::Display for MarginalDimension {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Unweighted mean accuracies for one group value along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub dimension: MarginalDimension,
    pub group: String,
    pub t_z_accuracy: f64,
    pub p_hvac_accuracy: f64,
    pub n_cells: usize,
}

/// Mean cell accuracies per group value along `dimension`, over scored
/// cells only. Group values with no scored cells are omitted (failures
/// render as gaps); an axis with no scored cells at all is an error.
pub fn marginal_table(
    matrix: &EvaluationMatrix,
    dimension: MarginalDimension,
) -> Result<Vec<MarginalRow>, EvalError> {
    let mut sums: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for (key, t_z, p_hvac) in matrix.scored() {
        let entry = sums.entry(dimension.group_of(key)).or_insert((0.0, 0.0, 0));
        entry.0 += t_z.accuracy;
        entry.1 += p_hvac.accuracy;
        entry.2 += 1;
    }
    let mut rows = Vec::new();
    for group in dimension.group_values() {
        if let Some((t_sum, p_sum, n)) = sums.get(&group) {
            rows.push(MarginalRow {
                dimension,
                group,
                t_z_accuracy: t_sum / *n as f64,
                p_hvac_accuracy: p_sum / *n as f64,
                n_cells: *n,
            });
        }
    }
    if rows.is_empty() {
        return Err(EvalError::EmptyGroup(dimension.label().to_string()));
    }
    Ok(rows)
}

/// All five marginal tables in report order.
pub fn all_marginals(matrix: &EvaluationMatrix) -> Result<Vec<MarginalRow>, EvalError> {
    let mut rows = Vec::new();
    for dim in MarginalDimension::ALL {
        rows.extend(marginal_table(matrix, dim)?);
    }
    Ok(rows)
}
