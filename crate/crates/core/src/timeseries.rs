//! Exogenous time series: weather, internal load, and derived disturbance
//! records at a fixed cadence.
//!
//! A [`TimeSeriesTable`] stores named columns against an implicit uniform
//! timeline `start + k * step`, so monotonicity and regular cadence hold by
//! construction. File ingestion (which has to cope with gaps, duplicates,
//! and leap days) lives in the companion CLI crate; this module only accepts
//! already-regular data.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::error::TimeSeriesError;
use crate::rng::standard_normal;

/// Ambient (outdoor air) temperature column, °C.
pub const COL_AMBIENT: &str = "t_am";
/// Global horizontal irradiance column, W/m².
pub const COL_GHI: &str = "ghi";
/// Metered internal electrical load column, W.
pub const COL_LOAD: &str = "load";

/// Calendar quarter used for training/testing windows.
///
/// Winter = January–March, Spring = April–June, Summer = July–September,
/// Fall = October–December.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    /// Quarter containing the given calendar month (1–12).
    pub fn from_month(month: u32) -> Season {
        match month {
            1..=3 => Season::Winter,
            4..=6 => Season::Spring,
            7..=9 => Season::Summer,
            _ => Season::Fall,
        }
    }

    /// First month of the quarter (1, 4, 7, or 10).
    pub fn first_month(self) -> u32 {
        match self {
            Season::Winter => 1,
            Season::Spring => 4,
            Season::Summer => 7,
            Season::Fall => 10,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Season::Winter => "Winter",
            Season::Spring => "Spring",
            Season::Summer => "Summer",
            Season::Fall => "Fall",
        }
    }

    /// Case-insensitive parse of the season label.
    pub fn parse(text: &str) -> Option<Season> {
        Season::ALL
            .into_iter()
            .find(|s| s.label().eq_ignore_ascii_case(text.trim()))
    }

    /// Calendar bounds of this quarter in the given year.
    pub fn window(self, year: i32) -> SeasonWindow {
        let start_month = self.first_month();
        let (end_year, end_month) = if start_month == 10 {
            (year + 1, 1)
        } else {
            (year, start_month + 3)
        };
        let day_start = NaiveDate::from_ymd_opt(year, start_month, 1).expect("valid quarter start");
        let day_end = NaiveDate::from_ymd_opt(end_year, end_month, 1).expect("valid quarter end");
        SeasonWindow {
            season: self,
            start: day_start.and_hms_opt(0, 0, 0).expect("midnight"),
            end: day_end.and_hms_opt(0, 0, 0).expect("midnight"),
        }
    }
}

impl core::fmt::Display for Season {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// Calendar bounds of one season in one year; `end` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonWindow {
    pub season: Season,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl SeasonWindow {
    /// Whole days the window spans.
    pub fn days(&self) -> i64 {
        self.end.signed_duration_since(self.start).num_days()
    }
}

/// Named real-valued columns on a uniform timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    start: NaiveDateTime,
    step_seconds: u32,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeriesTable {
    /// Builds a table from equal-length finite columns.
    pub fn new(
        start: NaiveDateTime,
        step_seconds: u32,
        columns: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, TimeSeriesError> {
        if step_seconds == 0 {
            return Err(TimeSeriesError::InvalidTable("step must be positive".into()));
        }
        if columns.is_empty() {
            return Err(TimeSeriesError::InvalidTable("no columns".into()));
        }
        let len = columns[0].1.len();
        if len < 2 {
            return Err(TimeSeriesError::InvalidTable(format!(
                "need at least 2 rows, got {len}"
            )));
        }
        let mut names = Vec::with_capacity(columns.len());
        let mut data = Vec::with_capacity(columns.len());
        for (name, values) in columns {
            if values.len() != len {
                return Err(TimeSeriesError::InvalidTable(format!(
                    "column {name} has {} rows, expected {len}",
                    values.len()
                )));
            }
            if names.iter().any(|n| n == &name) {
                return Err(TimeSeriesError::InvalidTable(format!(
                    "duplicate column {name}"
                )));
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(TimeSeriesError::NonFiniteValue { column: name, row });
            }
            names.push(name);
            data.push(values);
        }
        Ok(Self {
            start,
            step_seconds,
            names,
            columns: data,
        })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    /// Tables are never empty (construction requires ≥ 2 rows).
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn step_seconds(&self) -> u32 {
        self.step_seconds
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64], TimeSeriesError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| TimeSeriesError::MissingColumn(name.to_string()))
    }

    /// Timestamp of row `k` (also valid at `k = len()` for the exclusive end).
    pub fn timestamp(&self, k: usize) -> NaiveDateTime {
        self.start + Duration::seconds(k as i64 * i64::from(self.step_seconds))
    }

    /// Exclusive end of the covered interval.
    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.len())
    }

    /// Appends a derived column of matching length.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self, TimeSeriesError> {
        if values.len() != self.len() {
            return Err(TimeSeriesError::InvalidTable(format!(
                "column {name} has {} rows, expected {}",
                values.len(),
                self.len()
            )));
        }
        if self.has_column(name) {
            return Err(TimeSeriesError::InvalidTable(format!(
                "duplicate column {name}"
            )));
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(TimeSeriesError::NonFiniteValue {
                column: name.to_string(),
                row,
            });
        }
        self.names.push(name.to_string());
        self.columns.push(values);
        Ok(self)
    }

    /// Contiguous sub-table of `count` rows starting at row `first`.
    pub fn slice_rows(&self, first: usize, count: usize) -> Result<Self, TimeSeriesError> {
        if count < 2 || first + count > self.len() {
            return Err(TimeSeriesError::OutOfRange(format!(
                "rows {first}..{} of {}",
                first + count,
                self.len()
            )));
        }
        let columns = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| (n.clone(), c[first..first + count].to_vec()))
            .collect();
        Self::new(self.timestamp(first), self.step_seconds, columns)
    }

    /// Slice of `days` whole days starting `offset_days` into the season
    /// window; must fit both the window and the table.
    pub fn slice_window(
        &self,
        window: &SeasonWindow,
        days: u32,
        offset_days: u32,
    ) -> Result<Self, TimeSeriesError> {
        let day_seconds: i64 = 86_400;
        let begin = window.start + Duration::seconds(i64::from(offset_days) * day_seconds);
        let finish = begin + Duration::seconds(i64::from(days) * day_seconds);
        if finish > window.end {
            return Err(TimeSeriesError::OutOfRange(format!(
                "{days}-day slice at offset {offset_days} exceeds the {} window",
                window.season
            )));
        }
        if begin < self.start || finish > self.end() {
            return Err(TimeSeriesError::OutOfRange(format!(
                "{}..{} not covered by table {}..{}",
                begin,
                finish,
                self.start,
                self.end()
            )));
        }
        let offset_seconds = begin.signed_duration_since(self.start).num_seconds();
        let step = i64::from(self.step_seconds);
        if offset_seconds % step != 0 || (i64::from(days) * day_seconds) % step != 0 {
            return Err(TimeSeriesError::OutOfRange(format!(
                "window not aligned to the {} s cadence",
                self.step_seconds
            )));
        }
        let first = (offset_seconds / step) as usize;
        let count = (i64::from(days) * day_seconds / step) as usize;
        self.slice_rows(first, count)
    }

    /// Changes cadence: downsampling averages complete bins (trailing
    /// partial bin dropped), upsampling repeats values (zero-order hold).
    pub fn resample(&self, new_step_seconds: u32) -> Result<Self, TimeSeriesError> {
        let old = self.step_seconds;
        let new = new_step_seconds;
        if new == 0 {
            return Err(TimeSeriesError::IncompatibleStep {
                from_seconds: old,
                to_seconds: new,
            });
        }
        if new == old {
            return Ok(self.clone());
        }
        if new > old && new % old == 0 {
            let factor = (new / old) as usize;
            let bins = self.len() / factor;
            if bins < 2 {
                return Err(TimeSeriesError::InvalidTable(format!(
                    "resampling to {new} s leaves {bins} rows"
                )));
            }
            let columns = self
                .names
                .iter()
                .zip(&self.columns)
                .map(|(n, c)| {
                    let means = (0..bins)
                        .map(|b| {
                            let chunk = &c[b * factor..(b + 1) * factor];
                            chunk.iter().sum::<f64>() / factor as f64
                        })
                        .collect();
                    (n.clone(), means)
                })
                .collect();
            return Self::new(self.start, new, columns);
        }
        if new < old && old % new == 0 {
            let factor = (old / new) as usize;
            let columns = self
                .names
                .iter()
                .zip(&self.columns)
                .map(|(n, c)| {
                    let mut held = Vec::with_capacity(c.len() * factor);
                    for &v in c {
                        for _ in 0..factor {
                            held.push(v);
                        }
                    }
                    (n.clone(), held)
                })
                .collect();
            return Self::new(self.start, new, columns);
        }
        Err(TimeSeriesError::IncompatibleStep {
            from_seconds: old,
            to_seconds: new,
        })
    }
}

/// Shape of the synthetic weather/load year.
///
/// The generator is a desk-scale stand-in for measured weather: smooth
/// seasonal and diurnal harmonics plus seeded AR(1) noise, a clear-sky
/// half-sine irradiance arc with seasonally varying day length and cloud
/// attenuation, and a double-peaked household load profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWeatherProfile {
    /// First timestamp of the generated table.
    pub start: NaiveDateTime,
    /// Annual mean ambient temperature, °C.
    pub mean_temp_c: f64,
    /// Amplitude of the annual harmonic (peak mid-July), °C.
    pub seasonal_amplitude_c: f64,
    /// Amplitude of the daily harmonic (peak 15:00), °C.
    pub diurnal_amplitude_c: f64,
    /// Stationary standard deviation of the AR(1) temperature noise, °C.
    pub temp_noise_std_c: f64,
    /// Shared AR(1) coefficient for all noise streams, in [0, 1).
    pub noise_ar: f64,
    /// Clear-sky solar-noon irradiance at the summer solstice, W/m².
    pub peak_ghi_w_m2: f64,
    /// Relative winter reduction of clear-sky irradiance, in [0, 1].
    pub seasonal_ghi_swing: f64,
    /// Scale of the random cloud attenuation, in [0, 1].
    pub cloud_attenuation_std: f64,
    /// Always-on household load, W.
    pub base_load_w: f64,
    /// Peak of the morning load bump (07:30), W.
    pub morning_bump_w: f64,
    /// Peak of the evening load bump (19:30), W.
    pub evening_bump_w: f64,
    /// Stationary standard deviation of the AR(1) load noise, W.
    pub load_noise_std_w: f64,
}

impl Default for SyntheticWeatherProfile {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2017, 1, 1)
                .expect("valid date")
                .and_hms_opt(0, 0, 0)
                .expect("midnight"),
            mean_temp_c: 19.0,
            seasonal_amplitude_c: 10.0,
            diurnal_amplitude_c: 6.0,
            temp_noise_std_c: 0.6,
            noise_ar: 0.97,
            peak_ghi_w_m2: 900.0,
            seasonal_ghi_swing: 0.2,
            cloud_attenuation_std: 0.25,
            base_load_w: 350.0,
            morning_bump_w: 500.0,
            evening_bump_w: 800.0,
            load_noise_std_w: 120.0,
        }
    }
}

impl SyntheticWeatherProfile {
    /// Checks amplitudes are non-negative and shape factors lie in range.
    pub fn validate(&self) -> Result<(), TimeSeriesError> {
        let nonneg = [
            ("seasonal_amplitude_c", self.seasonal_amplitude_c),
            ("diurnal_amplitude_c", self.diurnal_amplitude_c),
            ("temp_noise_std_c", self.temp_noise_std_c),
            ("peak_ghi_w_m2", self.peak_ghi_w_m2),
            ("base_load_w", self.base_load_w),
            ("morning_bump_w", self.morning_bump_w),
            ("evening_bump_w", self.evening_bump_w),
            ("load_noise_std_w", self.load_noise_std_w),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TimeSeriesError::InvalidProfile(format!("{name} = {v}")));
            }
        }
        if !self.mean_temp_c.is_finite() {
            return Err(TimeSeriesError::InvalidProfile("mean_temp_c".into()));
        }
        if !(0.0..1.0).contains(&self.noise_ar) {
            return Err(TimeSeriesError::InvalidProfile(format!(
                "noise_ar = {}",
                self.noise_ar
            )));
        }
        for (name, v) in [
            ("seasonal_ghi_swing", self.seasonal_ghi_swing),
            ("cloud_attenuation_std", self.cloud_attenuation_std),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(TimeSeriesError::InvalidProfile(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Stationary AR(1) noise stream: `n' = ar·n + std·sqrt(1 − ar²)·z`.
struct ArNoise {
    value: f64,
    ar: f64,
    innovation_scale: f64,
}

impl ArNoise {
    fn new(std: f64, ar: f64) -> Self {
        Self {
            value: 0.0,
            ar,
            innovation_scale: std * (1.0 - ar * ar).sqrt(),
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.value = self.ar * self.value + self.innovation_scale * standard_normal(rng);
        self.value
    }
}

/// Generates `year_days` days of ambient temperature (°C), global
/// horizontal irradiance (W/m²), and internal load (W) at the given
/// cadence. Deterministic for a fixed seed.
pub fn synthesize_weather(
    year_days: u32,
    step_seconds: u32,
    profile: &SyntheticWeatherProfile,
    seed: u64,
) -> Result<TimeSeriesTable, TimeSeriesError> {
    profile.validate()?;
    if year_days == 0 {
        return Err(TimeSeriesError::InvalidProfile("year_days = 0".into()));
    }
    if step_seconds == 0 || 86_400 % step_seconds != 0 {
        return Err(TimeSeriesError::InvalidProfile(format!(
            "step of {step_seconds} s does not divide a day"
        )));
    }
    let rows_per_day = (86_400 / step_seconds) as usize;
    let rows = rows_per_day * year_days as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut temp_noise = ArNoise::new(profile.temp_noise_std_c, profile.noise_ar);
    let mut cloud_noise = ArNoise::new(1.0, profile.noise_ar);
    let mut load_noise = ArNoise::new(profile.load_noise_std_w, profile.noise_ar);

    let mut t_am = Vec::with_capacity(rows);
    let mut ghi = Vec::with_capacity(rows);
    let mut load = Vec::with_capacity(rows);

    let two_pi = 2.0 * core::f64::consts::PI;
    for k in 0..rows {
        let when = profile.start + Duration::seconds(k as i64 * i64::from(step_seconds));
        let day = when.date().ordinal0() as f64;
        let hour = f64::from(when.num_seconds_from_midnight()) / 3600.0;

        // Thermal annual phase peaks mid-July (day 197); solar day-length
        // phase peaks at the solstice (day 172).
        let thermal_phase = (two_pi * (day - 197.0) / 365.0).cos();
        let solar_phase = (two_pi * (day - 172.0) / 365.0).cos();

        let temperature = profile.mean_temp_c
            + profile.seasonal_amplitude_c * thermal_phase
            + profile.diurnal_amplitude_c * (two_pi * (hour - 15.0) / 24.0).cos()
            + temp_noise.step(&mut rng);

        let daylight = 12.0 + 2.5 * solar_phase;
        let sunrise = 12.0 - daylight / 2.0;
        let cloud = cloud_noise.step(&mut rng);
        let irradiance = if hour > sunrise && hour < sunrise + daylight {
            let clear_sky = profile.peak_ghi_w_m2
                * (1.0 - profile.seasonal_ghi_swing * (1.0 - solar_phase) / 2.0)
                * (core::f64::consts::PI * (hour - sunrise) / daylight).sin();
            let attenuation = (1.0 - profile.cloud_attenuation_std * cloud.abs()).max(0.15);
            (clear_sky * attenuation).max(0.0)
        } else {
            0.0
        };

        let bump = |center: f64, width: f64, peak: f64| {
            let z = (hour - center) / width;
            peak * (-z * z).exp()
        };
        let demand = (profile.base_load_w
            + bump(7.5, 1.5, profile.morning_bump_w)
            + bump(19.5, 2.0, profile.evening_bump_w)
            + load_noise.step(&mut rng))
        .max(0.0);

        t_am.push(temperature);
        ghi.push(irradiance);
        load.push(demand);
    }

    TimeSeriesTable::new(
        profile.start,
        step_seconds,
        vec![
            (COL_AMBIENT.to_string(), t_am),
            (COL_GHI.to_string(), ghi),
            (COL_LOAD.to_string(), load),
        ],
    )
}

/// Sol-air temperatures `(wall, roof)` in °C.
///
/// `T_sol = T_am + alpha · I_surface / h_o`, where the roof sees the full
/// horizontal irradiance and the wall sees `wall_factor` of it.
pub fn sol_air_temperatures(
    t_am: f64,
    ghi: f64,
    alpha: f64,
    h_o: f64,
    wall_factor: f64,
) -> (f64, f64) {
    let roof = t_am + alpha * ghi / h_o;
    let wall = t_am + alpha * ghi * wall_factor / h_o;
    (wall, roof)
}

/// Conversion constants from raw weather/load columns to model disturbances.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousConfig {
    /// Surface solar absorptivity, in [0, 1].
    pub alpha: f64,
    /// Exterior combined heat-transfer coefficient, W/(m²·K).
    pub h_o: f64,
    /// Fraction of horizontal irradiance seen by vertical walls, in [0, 1].
    pub wall_factor: f64,
    /// Effective solar aperture converting GHI to an indoor gain, m².
    pub aperture_m2: f64,
    /// Fraction of the metered electrical load released as indoor heat.
    pub ihl_fraction: f64,
}

impl Default for ExogenousConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            h_o: 22.7,
            wall_factor: 0.5,
            aperture_m2: 3.0,
            ihl_fraction: 0.8,
        }
    }
}

impl ExogenousConfig {
    pub fn validate(&self) -> Result<(), TimeSeriesError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(TimeSeriesError::InvalidProfile(format!(
                "alpha = {}",
                self.alpha
            )));
        }
        if !(self.h_o > 0.0) || !self.h_o.is_finite() {
            return Err(TimeSeriesError::InvalidProfile(format!("h_o = {}", self.h_o)));
        }
        if !(0.0..=1.0).contains(&self.wall_factor) {
            return Err(TimeSeriesError::InvalidProfile(format!(
                "wall_factor = {}",
                self.wall_factor
            )));
        }
        if !(self.aperture_m2 >= 0.0) || !self.aperture_m2.is_finite() {
            return Err(TimeSeriesError::InvalidProfile(format!(
                "aperture_m2 = {}",
                self.aperture_m2
            )));
        }
        if !(0.0..=1.0).contains(&self.ihl_fraction) {
            return Err(TimeSeriesError::InvalidProfile(format!(
                "ihl_fraction = {}",
                self.ihl_fraction
            )));
        }
        Ok(())
    }
}

/// One row of model disturbances derived from the weather/load columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExogenousRecord {
    /// Ambient temperature, °C.
    pub t_am: f64,
    /// Solar heat gain reaching the indoor node, W.
    pub q_solar: f64,
    /// Internal heat load from occupants and appliances, W.
    pub q_ihl: f64,
    /// Sol-air temperature at the wall surface, °C.
    pub t_sol_w: f64,
    /// Sol-air temperature at the roof surface, °C.
    pub t_sol_r: f64,
}

/// Derives per-row disturbance records from the `t_am`/`ghi`/`load` columns.
pub fn exogenous_records(
    table: &TimeSeriesTable,
    config: &ExogenousConfig,
) -> Result<Vec<ExogenousRecord>, TimeSeriesError> {
    config.validate()?;
    let t_am = table.column(COL_AMBIENT)?;
    let ghi = table.column(COL_GHI)?;
    let load = table.column(COL_LOAD)?;
    let mut records = Vec::with_capacity(table.len());
    for k in 0..table.len() {
        let (t_sol_w, t_sol_r) = sol_air_temperatures(
            t_am[k],
            ghi[k],
            config.alpha,
            config.h_o,
            config.wall_factor,
        );
        records.push(ExogenousRecord {
            t_am: t_am[k],
            q_solar: ghi[k] * config.aperture_m2,
            q_ihl: load[k] * config.ihl_fraction,
            t_sol_w,
            t_sol_r,
        });
    }
    Ok(records)
}
