//! Run configuration: one hierarchical TOML document with a default for
//! every field except the output directory.
//!
//! Unknown keys are rejected so typos fail loudly instead of silently
//! reverting to defaults. The configuration hash is computed over the
//! canonical re-serialization (not the raw file bytes), so formatting and
//! comments do not change it.

use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rctherm_core::estimate::{EstimationMethod, OptimizeOptions};
use rctherm_core::evaluate::{MatrixSpec, SetpointClass};
use rctherm_core::models::{ModelOrder, ParamKind, ParameterVector};
use rctherm_core::simulate::HvacMode;
use rctherm_core::timeseries::{ExogenousConfig, Season, SyntheticWeatherProfile};
use rctherm_core::HouseElectricalParams;

use crate::error::{CliError, CliResult};

fn d_seed() -> u64 {
    42
}
fn d_jobs() -> usize {
    1
}
fn d_timestamp_column() -> String {
    "timestamp".into()
}
fn d_ambient_column() -> String {
    "t_am".into()
}
fn d_ghi_column() -> String {
    "ghi".into()
}
fn d_load_column() -> String {
    "load".into()
}
fn d_start() -> String {
    "2017-01-01T00:00:00".into()
}
fn d_year_days() -> u32 {
    365
}
fn d_step_seconds() -> u32 {
    600
}
fn d_true() -> bool {
    true
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory — the only field without a default; may instead be
    /// supplied with `--out-dir`.
    pub out_dir: Option<PathBuf>,
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Upper bound on concurrently evaluated parameter sets.
    pub jobs: usize,
    pub input: InputConfig,
    pub synthetic: SyntheticConfig,
    pub truth: TruthConfig,
    pub electrical: ElectricalConfig,
    pub thermostat: ThermostatSection,
    pub exogenous: ExogenousSection,
    pub estimation: EstimationConfig,
    pub matrix: MatrixSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: None,
            seed: d_seed(),
            jobs: d_jobs(),
            input: InputConfig::default(),
            synthetic: SyntheticConfig::default(),
            truth: TruthConfig::default(),
            electrical: ElectricalConfig::default(),
            thermostat: ThermostatSection::default(),
            exogenous: ExogenousSection::default(),
            estimation: EstimationConfig::default(),
            matrix: MatrixSection::default(),
        }
    }
}

/// External input files; all optional — absent paths mean "synthesize".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Weather/load CSV; when unset the synthetic profile is used.
    pub weather_csv: Option<PathBuf>,
    /// Previously generated truth trace used as training data by
    /// `estimate`; when unset training truth is simulated in memory.
    pub truth_csv: Option<PathBuf>,
    pub timestamp_column: String,
    pub ambient_column: String,
    pub ghi_column: String,
    pub load_column: String,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            weather_csv: None,
            truth_csv: None,
            timestamp_column: d_timestamp_column(),
            ambient_column: d_ambient_column(),
            ghi_column: d_ghi_column(),
            load_column: d_load_column(),
        }
    }
}

/// Synthetic weather/load generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// ISO-8601 start of the generated year.
    pub start: String,
    pub year_days: u32,
    pub step_seconds: u32,
    pub mean_temp_c: f64,
    pub seasonal_amplitude_c: f64,
    pub diurnal_amplitude_c: f64,
    pub temp_noise_std_c: f64,
    pub noise_ar: f64,
    pub peak_ghi_w_m2: f64,
    pub seasonal_ghi_swing: f64,
    pub cloud_attenuation_std: f64,
    pub base_load_w: f64,
    pub morning_bump_w: f64,
    pub evening_bump_w: f64,
    pub load_noise_std_w: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let p = SyntheticWeatherProfile::default();
        Self {
            start: d_start(),
            year_days: d_year_days(),
            step_seconds: d_step_seconds(),
            mean_temp_c: p.mean_temp_c,
            seasonal_amplitude_c: p.seasonal_amplitude_c,
            diurnal_amplitude_c: p.diurnal_amplitude_c,
            temp_noise_std_c: p.temp_noise_std_c,
            noise_ar: p.noise_ar,
            peak_ghi_w_m2: p.peak_ghi_w_m2,
            seasonal_ghi_swing: p.seasonal_ghi_swing,
            cloud_attenuation_std: p.cloud_attenuation_std,
            base_load_w: p.base_load_w,
            morning_bump_w: p.morning_bump_w,
            evening_bump_w: p.evening_bump_w,
            load_noise_std_w: p.load_noise_std_w,
        }
    }
}

/// Ground-truth four-state parameters and the sensor noise injected into
/// training outputs. These are synthetic defaults, not published values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    #[serde(rename = "R_w")]
    pub r_w: f64,
    #[serde(rename = "R_attic")]
    pub r_attic: f64,
    #[serde(rename = "R_im")]
    pub r_im: f64,
    #[serde(rename = "R_win")]
    pub r_win: f64,
    #[serde(rename = "R_roof")]
    pub r_roof: f64,
    #[serde(rename = "C_in")]
    pub c_in: f64,
    #[serde(rename = "C_w")]
    pub c_w: f64,
    #[serde(rename = "C_attic")]
    pub c_attic: f64,
    #[serde(rename = "C_im")]
    pub c_im: f64,
    #[serde(rename = "A_in")]
    pub a_in: f64,
    #[serde(rename = "B_in")]
    pub b_in: f64,
    #[serde(rename = "D_im")]
    pub d_im: f64,
    /// Sensor noise on recorded training outputs, K.
    pub measurement_noise_std_k: f64,
    /// Process noise on truth states, K per step (0 isolates structural
    /// mismatch when fitting reduced orders).
    pub process_noise_std_k: f64,
}

impl Default for TruthConfig {
    fn default() -> Self {
        let v = ParameterVector::sm4_synthetic_default();
        let g = |name: &str| v.get(name).expect("schema name");
        Self {
            r_w: g("R_w"),
            r_attic: g("R_attic"),
            r_im: g("R_im"),
            r_win: g("R_win"),
            r_roof: g("R_roof"),
            c_in: g("C_in"),
            c_w: g("C_w"),
            c_attic: g("C_attic"),
            c_im: g("C_im"),
            a_in: g("A_in"),
            b_in: g("B_in"),
            d_im: g("D_im"),
            measurement_noise_std_k: 0.05,
            process_noise_std_k: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectricalConfig {
    pub cop: f64,
    pub pf: f64,
    pub q_ac_rated_w: f64,
}

impl Default for ElectricalConfig {
    fn default() -> Self {
        let e = HouseElectricalParams::default();
        Self {
            cop: e.cop,
            pf: e.pf,
            q_ac_rated_w: e.q_ac_rated_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermostatSection {
    pub deadband_half_width_k: f64,
    /// "auto", "cooling", or "heating".
    pub mode: String,
}

impl Default for ThermostatSection {
    fn default() -> Self {
        Self {
            deadband_half_width_k: 0.5,
            mode: "auto".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExogenousSection {
    pub alpha: f64,
    pub h_o: f64,
    pub wall_factor: f64,
    pub aperture_m2: f64,
    pub ihl_fraction: f64,
}

impl Default for ExogenousSection {
    fn default() -> Self {
        let e = ExogenousConfig::default();
        Self {
            alpha: e.alpha,
            h_o: e.h_o,
            wall_factor: e.wall_factor,
            aperture_m2: e.aperture_m2,
            ihl_fraction: e.ihl_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub methods: Vec<String>,
    pub orders: Vec<String>,
    pub starts: usize,
    pub max_iterations: usize,
    pub grad_tolerance: f64,
    pub f_rel_tolerance: f64,
    pub fd_rel_step: f64,
    pub p0_var: f64,
    pub q_var: f64,
    pub r_var: f64,
    /// Physical bounds by parameter kind: [low, high].
    pub r_bounds: [f64; 2],
    pub c_bounds: [f64; 2],
    pub gain_bounds: [f64; 2],
}

impl Default for EstimationConfig {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        Self {
            methods: vec!["NLS".into(), "BE".into(), "MLE".into()],
            orders: vec!["SM1".into(), "SM2".into()],
            starts: o.starts,
            max_iterations: o.max_iterations,
            grad_tolerance: o.grad_tolerance,
            f_rel_tolerance: o.f_rel_tolerance,
            fd_rel_step: o.fd_rel_step,
            p0_var: 1.0,
            q_var: 1e-4,
            r_var: 2.5e-3,
            r_bounds: [1e-4, 1.0],
            c_bounds: [1e4, 1e9],
            gain_bounds: [0.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSection {
    pub train_seasons: Vec<String>,
    pub test_seasons: Vec<String>,
    pub setpoints: Vec<String>,
    pub train_days: u32,
    pub test_days: u32,
    pub train_setpoint_c: f64,
    pub zero_floor_w: f64,
    pub bin_seconds: u32,
    /// Emit per-cell truth/prediction trace CSVs from `evaluate`.
    pub emit_cell_traces: bool,
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            train_seasons: Season::ALL.iter().map(|s| s.label().to_string()).collect(),
            test_seasons: Season::ALL.iter().map(|s| s.label().to_string()).collect(),
            setpoints: SetpointClass::ALL
                .iter()
                .map(|s| s.label().to_string())
                .collect(),
            train_days: 21,
            test_days: 30,
            train_setpoint_c: 22.0,
            zero_floor_w: 1.0,
            bin_seconds: 10_800,
            emit_cell_traces: d_true(),
        }
    }
}

fn parse_list<T, F: Fn(&str) -> Option<T>>(
    what: &str,
    items: &[String],
    parse: F,
) -> CliResult<Vec<T>> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        out.push(
            parse(item).ok_or_else(|| CliError::Config(format!("unknown {what} {item:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("empty {what} list")));
    }
    Ok(out)
}

impl RunConfig {
    /// Loads and validates a TOML config file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::FileFormat {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.truth_theta()?;
        self.thermostat_mode()?;
        self.methods()?;
        self.orders()?;
        self.train_seasons()?;
        self.test_seasons()?;
        self.setpoints()?;
        self.weather_profile()?;
        self.electrical().validate().map_err(CliError::from)?;
        self.exogenous().validate().map_err(CliError::from)?;
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        for (name, [lo, hi]) in [
            ("r_bounds", self.estimation.r_bounds),
            ("c_bounds", self.estimation.c_bounds),
            ("gain_bounds", self.estimation.gain_bounds),
        ] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(CliError::Config(format!("invalid {name}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Canonical hash of the configuration, stable across machines.
    ///
    /// Covers every field that can influence produced numbers. Output
    /// location and parallelism are excluded: runs differing only in
    /// those produce byte-identical payloads and may share fit files.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.out_dir = None;
        semantic.jobs = d_jobs();
        let canonical = toml::to_string(&semantic).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("hex");
        }
        hex
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory (set out_dir or --out-dir)".into()))
    }

    pub fn synthetic_start(&self) -> CliResult<NaiveDateTime> {
        NaiveDateTime::parse_from_str(&self.synthetic.start, "%Y-%m-%dT%H:%M:%S")
            .map_err(|e| CliError::Config(format!("synthetic.start: {e}")))
    }

    pub fn weather_profile(&self) -> CliResult<SyntheticWeatherProfile> {
        let s = &self.synthetic;
        let profile = SyntheticWeatherProfile {
            start: self.synthetic_start()?,
            mean_temp_c: s.mean_temp_c,
            seasonal_amplitude_c: s.seasonal_amplitude_c,
            diurnal_amplitude_c: s.diurnal_amplitude_c,
            temp_noise_std_c: s.temp_noise_std_c,
            noise_ar: s.noise_ar,
            peak_ghi_w_m2: s.peak_ghi_w_m2,
            seasonal_ghi_swing: s.seasonal_ghi_swing,
            cloud_attenuation_std: s.cloud_attenuation_std,
            base_load_w: s.base_load_w,
            morning_bump_w: s.morning_bump_w,
            evening_bump_w: s.evening_bump_w,
            load_noise_std_w: s.load_noise_std_w,
        };
        profile.validate().map_err(CliError::from)?;
        Ok(profile)
    }

    pub fn truth_theta(&self) -> CliResult<ParameterVector> {
        let t = &self.truth;
        ParameterVector::from_named(
            ModelOrder::Sm4,
            &[
                ("R_w", t.r_w),
                ("R_attic", t.r_attic),
                ("R_im", t.r_im),
                ("R_win", t.r_win),
                ("R_roof", t.r_roof),
                ("C_in", t.c_in),
                ("C_w", t.c_w),
                ("C_attic", t.c_attic),
                ("C_im", t.c_im),
                ("A_in", t.a_in),
                ("B_in", t.b_in),
                ("D_im", t.d_im),
            ],
        )
        .map_err(CliError::from)
    }

    pub fn electrical(&self) -> HouseElectricalParams {
        HouseElectricalParams {
            cop: self.electrical.cop,
            pf: self.electrical.pf,
            q_ac_rated_w: self.electrical.q_ac_rated_w,
        }
    }

    pub fn exogenous(&self) -> ExogenousConfig {
        ExogenousConfig {
            alpha: self.exogenous.alpha,
            h_o: self.exogenous.h_o,
            wall_factor: self.exogenous.wall_factor,
            aperture_m2: self.exogenous.aperture_m2,
            ihl_fraction: self.exogenous.ihl_fraction,
        }
    }

    pub fn thermostat_mode(&self) -> CliResult<HvacMode> {
        HvacMode::parse(&self.thermostat.mode)
            .ok_or_else(|| CliError::Config(format!("unknown mode {:?}", self.thermostat.mode)))
    }

    pub fn methods(&self) -> CliResult<Vec<EstimationMethod>> {
        parse_list("method", &self.estimation.methods, EstimationMethod::parse)
    }

    pub fn orders(&self) -> CliResult<Vec<ModelOrder>> {
        let orders = parse_list("order", &self.estimation.orders, ModelOrder::parse)?;
        if orders.contains(&ModelOrder::Sm4) {
            return Err(CliError::Config(
                "estimation.orders: only SM1 and SM2 are fitted".into(),
            ));
        }
        Ok(orders)
    }

    pub fn train_seasons(&self) -> CliResult<Vec<Season>> {
        parse_list("season", &self.matrix.train_seasons, Season::parse)
    }

    pub fn test_seasons(&self) -> CliResult<Vec<Season>> {
        parse_list("season", &self.matrix.test_seasons, Season::parse)
    }

    pub fn setpoints(&self) -> CliResult<Vec<SetpointClass>> {
        parse_list("setpoint", &self.matrix.setpoints, SetpointClass::parse)
    }

    /// Physical-space bounds for one model order, from the kind-level
    /// bound settings.
    pub fn bounds_for(&self, order: ModelOrder) -> Vec<(f64, f64)> {
        let e = &self.estimation;
        order
            .param_kinds()
            .iter()
            .map(|kind| match kind {
                ParamKind::Resistance => (e.r_bounds[0], e.r_bounds[1]),
                ParamKind::Capacitance => (e.c_bounds[0], e.c_bounds[1]),
                ParamKind::Gain => (e.gain_bounds[0], e.gain_bounds[1]),
            })
            .collect()
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        let e = &self.estimation;
        OptimizeOptions {
            starts: e.starts,
            max_iterations: e.max_iterations,
            grad_tolerance: e.grad_tolerance,
            f_rel_tolerance: e.f_rel_tolerance,
            fd_rel_step: e.fd_rel_step,
            seed: self.seed,
        }
    }

    /// Core sweep specification assembled from the config.
    pub fn matrix_spec(&self) -> CliResult<MatrixSpec> {
        let spec = MatrixSpec {
            methods: self.methods()?,
            orders: self.orders()?,
            train_seasons: self.train_seasons()?,
            test_seasons: self.test_seasons()?,
            setpoints: self.setpoints()?,
            train_days: self.matrix.train_days,
            test_days: self.matrix.test_days,
            train_setpoint_c: self.matrix.train_setpoint_c,
            mode: self.thermostat_mode()?,
            deadband_half_width_k: self.thermostat.deadband_half_width_k,
            measurement_noise_std_k: self.truth.measurement_noise_std_k,
            noise_seed: self.seed,
            optimize: self.optimize_options(),
            p0_var: self.estimation.p0_var,
            q_var: self.estimation.q_var,
            r_var: self.estimation.r_var,
            r_bounds: (self.estimation.r_bounds[0], self.estimation.r_bounds[1]),
            c_bounds: (self.estimation.c_bounds[0], self.estimation.c_bounds[1]),
            gain_bounds: (self.estimation.gain_bounds[0], self.estimation.gain_bounds[1]),
            zero_floor_w: self.matrix.zero_floor_w,
            bin_seconds: self.matrix.bin_seconds,
        };
        spec.validate().map_err(CliError::from)?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rctherm_core::models::default_bounds;

    #[test]
    fn minimal_config_uses_defaults() {
        let config: RunConfig = toml::from_str("out_dir = \"runs/x\"").unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.jobs, 1);
        assert_eq!(config.estimation.starts, 8);
        assert_eq!(config.matrix.train_days, 21);
        assert_eq!(config.truth.measurement_noise_std_k, 0.05);
        config.validate().unwrap();
        assert_eq!(config.matrix_spec().unwrap().fit_keys().len(), 24);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("out_dir = \"x\"\nbogus = 1").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err =
            toml::from_str::<RunConfig>("out_dir = \"x\"\n[estimation]\ntypo_field = 3")
                .unwrap_err();
        assert!(err.to_string().contains("typo_field"), "{err}");
    }

    #[test]
    fn round_trip_preserves_the_config() {
        let mut config = RunConfig::default();
        config.out_dir = Some(PathBuf::from("runs/demo"));
        config.seed = 7;
        config.estimation.methods = vec!["BE".into()];
        let text = toml::to_string(&config).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn hash_tracks_content_not_formatting() {
        let a: RunConfig = toml::from_str("out_dir = \"x\"\nseed = 9").unwrap();
        let b: RunConfig =
            toml::from_str("# a comment\nseed   =   9\nout_dir = \"x\"").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c: RunConfig = toml::from_str("out_dir = \"x\"\nseed = 10").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_output_location_and_parallelism() {
        let a: RunConfig = toml::from_str("out_dir = \"x\"\njobs = 1").unwrap();
        let b: RunConfig = toml::from_str("out_dir = \"elsewhere/y\"\njobs = 8").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c: RunConfig = toml::from_str("out_dir = \"x\"\n[truth]\nR_w = 0.02").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn truth_theta_matches_core_defaults() {
        let config = RunConfig::default();
        let theta = config.truth_theta().unwrap();
        assert_eq!(
            theta.values(),
            ParameterVector::sm4_synthetic_default().values()
        );
    }

    #[test]
    fn bad_entries_are_flagged() {
        let mut config = RunConfig::default();
        config.estimation.methods = vec!["GRADIENT-DESCENT".into()];
        assert!(matches!(config.methods(), Err(CliError::Config(_))));

        let mut config = RunConfig::default();
        config.estimation.orders = vec!["SM4".into()];
        assert!(config.orders().is_err());

        let mut config = RunConfig::default();
        config.thermostat.mode = "eco".into();
        assert!(config.thermostat_mode().is_err());

        let mut config = RunConfig::default();
        config.truth.c_in = -5.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn bounds_follow_parameter_kinds() {
        let config = RunConfig::default();
        let bounds = config.bounds_for(ModelOrder::Sm2);
        assert_eq!(bounds.len(), 7);
        assert_eq!(bounds[0], (1e-4, 1.0));
        assert_eq!(bounds[2], (1e4, 1e9));
        assert_eq!(bounds[6], (0.0, 5.0));
        // Matches the core defaults used by EstimationProblem::new.
        assert_eq!(bounds, default_bounds(ModelOrder::Sm2));
    }
}
