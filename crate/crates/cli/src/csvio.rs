//! CSV reading and writing.
//!
//! Two number formats are used deliberately: weather files are written with
//! six significant digits (human-scale inputs), while simulation traces and
//! result tables use Rust's shortest round-trip formatting so a written file
//! reloads bitwise identical.

use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use rctherm_core::error::TimeSeriesError;
use rctherm_core::evaluate::{CellOutcome, EvaluationMatrix, MarginalRow};
use rctherm_core::models::ModelOrder;
use rctherm_core::simulate::{HvacMode, SimulationTrace};
use rctherm_core::timeseries::{TimeSeriesTable, COL_AMBIENT, COL_GHI, COL_LOAD};

use crate::config::InputConfig;
use crate::error::{CliError, CliResult};

/// Fraction of missing rows above which ingestion refuses the file.
const GAP_LIMIT_PERCENT: f64 = 1.0;

const SECONDS_PER_DAY: i64 = 86_400;

/// Timestamp layout used in every file this tool writes.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Decimal text with six significant digits (weather outputs).
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 12) as usize;
    format!("{v:.decimals$}")
}

/// Shortest text that parses back to exactly the same float.
pub fn format_exact(v: f64) -> String {
    format!("{v}")
}

fn ingest_error(path: &Path, line: u64, message: impl ToString) -> CliError {
    CliError::Ingest {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

fn file_error(path: &Path, message: impl ToString) -> CliError {
    CliError::FileFormat {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn open_reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => file_error(path, e),
        })
}

fn header_index(
    path: &Path,
    headers: &StringRecord,
    column: &str,
) -> CliResult<usize> {
    headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| ingest_error(path, 1, TimeSeriesError::MissingColumn(column.into())))
}

fn record_line(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_float(path: &Path, record: &StringRecord, idx: usize, column: &str) -> CliResult<f64> {
    let line = record_line(record);
    let cell = record
        .get(idx)
        .ok_or_else(|| ingest_error(path, line, format!("row too short for column {column}")))?;
    let value: f64 = cell
        .parse()
        .map_err(|_| ingest_error(path, line, format!("unparseable {column} value {cell:?}")))?;
    if !value.is_finite() {
        return Err(ingest_error(
            path,
            line,
            format!("non-finite {column} value {cell}"),
        ));
    }
    Ok(value)
}

fn parse_ts_cell(path: &Path, record: &StringRecord, idx: usize) -> CliResult<NaiveDateTime> {
    let line = record_line(record);
    let cell = record
        .get(idx)
        .ok_or_else(|| ingest_error(path, line, "row too short for timestamp"))?;
    parse_timestamp(cell).ok_or_else(|| {
        ingest_error(
            path,
            line,
            TimeSeriesError::UnparseableTimestamp {
                row: line as usize,
                text: cell.to_string(),
            },
        )
    })
}

/// Number of Feb 29 calendar days in `[from, to)`.
fn leap_days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    let mut count = 0;
    for year in from.year()..=to.year() {
        if let Some(leap) = NaiveDate::from_ymd_opt(year, 2, 29) {
            if leap >= from && leap < to {
                count += 1;
            }
        }
    }
    count
}

/// Puts sampled rows onto a uniform timeline.
///
/// The cadence is the smallest observed spacing; every other spacing must be
/// a whole multiple of it. Missing slots are linearly interpolated unless
/// they exceed [`GAP_LIMIT_PERCENT`] of the timeline.
fn regularize(
    path: &Path,
    rows: Vec<(NaiveDateTime, u64, Vec<f64>)>,
    n_cols: usize,
) -> CliResult<(NaiveDateTime, u32, Vec<Vec<f64>>)> {
    let start = rows[0].0;
    // Leap-day removal leaves one-day holes in the raw offsets; compress
    // them so season arithmetic sees a 365-day year.
    let mut offsets = Vec::with_capacity(rows.len());
    for (ts, _, _) in &rows {
        let raw = ts.signed_duration_since(start).num_seconds();
        let skipped = leap_days_between(start.date(), ts.date());
        offsets.push(raw - skipped * SECONDS_PER_DAY);
    }

    let mut step = i64::MAX;
    for pair in offsets.windows(2) {
        step = step.min(pair[1] - pair[0]);
    }
    if step <= 0 || step > i64::from(u32::MAX) {
        return Err(file_error(path, format!("unusable cadence {step} s")));
    }
    for (i, pair) in offsets.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap % step != 0 {
            return Err(ingest_error(
                path,
                rows[i + 1].1,
                TimeSeriesError::IrregularCadence {
                    row: i + 1,
                    gap_seconds: gap,
                    step_seconds: step,
                },
            ));
        }
    }

    let n_slots = (offsets[offsets.len() - 1] / step + 1) as usize;
    let missing = n_slots - rows.len();
    if (missing as f64) * 100.0 > GAP_LIMIT_PERCENT * n_slots as f64 {
        return Err(file_error(
            path,
            TimeSeriesError::TooManyGaps {
                missing,
                total: n_slots,
                limit_percent: GAP_LIMIT_PERCENT,
            },
        ));
    }

    let mut columns = vec![vec![f64::NAN; n_slots]; n_cols];
    for (row, (_, _, values)) in rows.iter().enumerate() {
        let slot = (offsets[row] / step) as usize;
        for (c, v) in values.iter().enumerate() {
            columns[c][slot] = *v;
        }
    }
    // Interior linear interpolation; first and last slots are always filled.
    for col in &mut columns {
        let mut k = 1;
        while k < col.len() {
            if col[k].is_nan() {
                let run_start = k;
                while col[k].is_nan() {
                    k += 1;
                }
                let lo = col[run_start - 1];
                let hi = col[k];
                let span = (k - run_start + 1) as f64;
                for (j, slot) in (run_start..k).enumerate() {
                    let frac = (j + 1) as f64 / span;
                    col[slot] = lo + frac * (hi - lo);
                }
            }
            k += 1;
        }
    }

    Ok((start, step as u32, columns))
}

/// Reads a weather/load CSV into a table, using the configured column names.
///
/// Rows must be strictly increasing in time; Feb 29 rows are dropped and the
/// timeline compressed so downstream season windows stay uniform.
pub fn ingest_weather_csv(path: &Path, input: &InputConfig) -> CliResult<TimeSeriesTable> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| file_error(path, e))?
        .clone();
    let ts_idx = header_index(path, &headers, &input.timestamp_column)?;
    let am_idx = header_index(path, &headers, &input.ambient_column)?;
    let ghi_idx = header_index(path, &headers, &input.ghi_column)?;
    let load_idx = header_index(path, &headers, &input.load_column)?;

    let mut rows: Vec<(NaiveDateTime, u64, Vec<f64>)> = Vec::new();
    let mut last_kept: Option<NaiveDateTime> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| file_error(path, e))?;
        let line = record_line(&record);
        let ts = parse_ts_cell(path, &record, ts_idx)?;
        if let Some(prev) = last_kept {
            if ts <= prev {
                return Err(ingest_error(
                    path,
                    line,
                    TimeSeriesError::NonMonotonicTime { row },
                ));
            }
        }
        last_kept = Some(ts);
        if ts.date().month() == 2 && ts.date().day() == 29 {
            continue;
        }
        let values = vec![
            parse_float(path, &record, am_idx, &input.ambient_column)?,
            parse_float(path, &record, ghi_idx, &input.ghi_column)?,
            parse_float(path, &record, load_idx, &input.load_column)?,
        ];
        rows.push((ts, line, values));
    }
    if rows.len() < 2 {
        return Err(file_error(
            path,
            format!("need at least 2 usable rows, found {}", rows.len()),
        ));
    }

    let (start, step, mut columns) = regularize(path, rows, 3)?;
    let load = columns.pop().expect("3 columns");
    let ghi = columns.pop().expect("3 columns");
    let ambient = columns.pop().expect("3 columns");
    TimeSeriesTable::new(
        start,
        step,
        vec![
            (COL_AMBIENT.to_string(), ambient),
            (COL_GHI.to_string(), ghi),
            (COL_LOAD.to_string(), load),
        ],
    )
    .map_err(|e| file_error(path, e))
}

/// Writes a weather table using the configured column names, six
/// significant digits per value.
pub fn write_weather_csv(
    path: &Path,
    table: &TimeSeriesTable,
    input: &InputConfig,
) -> CliResult<()> {
    let mut writer = WriterBuilder::new()
        .from_path(path)
        .map_err(|e| file_error(path, e))?;
    writer
        .write_record([
            input.timestamp_column.as_str(),
            input.ambient_column.as_str(),
            input.ghi_column.as_str(),
            input.load_column.as_str(),
        ])
        .map_err(|e| file_error(path, e))?;
    let ambient = table.column(COL_AMBIENT)?;
    let ghi = table.column(COL_GHI)?;
    let load = table.column(COL_LOAD)?;
    for k in 0..table.len() {
        writer
            .write_record([
                format_timestamp(table.timestamp(k)),
                format_sig6(ambient[k]),
                format_sig6(ghi[k]),
                format_sig6(load[k]),
            ])
            .map_err(|e| file_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// One simulation trace read back from disk.
///
/// Unlike [`SimulationTrace`] this carries a per-row mode column, because a
/// year-long truth file concatenates season runs whose resolved modes
/// differ.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub order: ModelOrder,
    pub start: NaiveDateTime,
    pub step_seconds: u32,
    pub states: Vec<f64>,
    pub y: Vec<f64>,
    pub hvac_on: Vec<bool>,
    pub q_hvac: Vec<f64>,
    pub p_hvac: Vec<f64>,
    pub p: Vec<f64>,
    pub q_reactive: Vec<f64>,
    pub modes: Vec<HvacMode>,
}

impl TraceFile {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Extracts `[first, first+count)` as a single-mode trace.
    pub fn slice(&self, first: usize, count: usize) -> Result<SimulationTrace, String> {
        let end = first
            .checked_add(count)
            .filter(|&e| e <= self.len() && count > 0)
            .ok_or_else(|| {
                format!(
                    "slice {first}..{} outside trace of {} rows",
                    first + count,
                    self.len()
                )
            })?;
        let mode = self.modes[first];
        if self.modes[first..end].iter().any(|m| *m != mode) {
            return Err("slice spans a thermostat-mode change".into());
        }
        let n = self.order.n_states();
        Ok(SimulationTrace {
            order: self.order,
            start: self.start
                + chrono::Duration::seconds(first as i64 * i64::from(self.step_seconds)),
            step_seconds: self.step_seconds,
            resolved_mode: mode,
            states: self.states[first * n..end * n].to_vec(),
            y: self.y[first..end].to_vec(),
            hvac_on: self.hvac_on[first..end].to_vec(),
            q_hvac: self.q_hvac[first..end].to_vec(),
            p_hvac: self.p_hvac[first..end].to_vec(),
            p: self.p[first..end].to_vec(),
            q_reactive: self.q_reactive[first..end].to_vec(),
        })
    }
}

const TRACE_FIXED_COLUMNS: [&str; 7] = [
    "y",
    "hvac_on",
    "q_hvac",
    "p_hvac",
    "p",
    "q_reactive",
    "hvac_mode",
];

/// Writes one closed-loop trace; floats are lossless.
pub fn write_trace_csv(path: &Path, trace: &SimulationTrace) -> CliResult<()> {
    write_trace_rows(
        path,
        trace.order,
        (0..trace.len()).map(|k| TraceRow {
            timestamp: trace.start
                + chrono::Duration::seconds(k as i64 * i64::from(trace.step_seconds)),
            states: &trace.states[k * trace.order.n_states()..(k + 1) * trace.order.n_states()],
            y: trace.y[k],
            hvac_on: trace.hvac_on[k],
            q_hvac: trace.q_hvac[k],
            p_hvac: trace.p_hvac[k],
            p: trace.p[k],
            q_reactive: trace.q_reactive[k],
            mode: trace.resolved_mode,
        }),
    )
}

pub struct TraceRow<'a> {
    pub timestamp: NaiveDateTime,
    pub states: &'a [f64],
    pub y: f64,
    pub hvac_on: bool,
    pub q_hvac: f64,
    pub p_hvac: f64,
    pub p: f64,
    pub q_reactive: f64,
    pub mode: HvacMode,
}

/// Writes trace rows from any source (used to concatenate season runs into
/// one year-long file).
pub fn write_trace_rows<'a>(
    path: &Path,
    order: ModelOrder,
    rows: impl Iterator<Item = TraceRow<'a>>,
) -> CliResult<()> {
    let mut writer = WriterBuilder::new()
        .from_path(path)
        .map_err(|e| file_error(path, e))?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(order.state_labels().iter().map(|s| s.to_lowercase()));
    header.extend(TRACE_FIXED_COLUMNS.iter().map(|s| s.to_string()));
    writer
        .write_record(&header)
        .map_err(|e| file_error(path, e))?;
    for row in rows {
        let mut record = vec![format_timestamp(row.timestamp)];
        record.extend(row.states.iter().map(|v| format_exact(*v)));
        record.push(format_exact(row.y));
        record.push(if row.hvac_on { "1" } else { "0" }.to_string());
        record.push(format_exact(row.q_hvac));
        record.push(format_exact(row.p_hvac));
        record.push(format_exact(row.p));
        record.push(format_exact(row.q_reactive));
        record.push(row.mode.label().to_string());
        writer.write_record(&record).map_err(|e| file_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Reads a trace CSV written by [`write_trace_csv`] / [`write_trace_rows`].
///
/// The model order is inferred from the state columns between `timestamp`
/// and `y`.
pub fn read_trace_csv(path: &Path) -> CliResult<TraceFile> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| file_error(path, e))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.first() != Some(&"timestamp") {
        return Err(ingest_error(path, 1, "first column must be timestamp"));
    }
    let y_pos = names
        .iter()
        .position(|n| *n == "y")
        .ok_or_else(|| ingest_error(path, 1, TimeSeriesError::MissingColumn("y".into())))?;
    let n_states = y_pos - 1;
    let order = ModelOrder::ALL
        .into_iter()
        .find(|o| o.n_states() == n_states)
        .ok_or_else(|| ingest_error(path, 1, format!("{n_states} state columns match no model")))?;
    let expected: Vec<String> = order
        .state_labels()
        .iter()
        .map(|s| s.to_lowercase())
        .collect();
    for (i, want) in expected.iter().enumerate() {
        if names.get(1 + i).copied() != Some(want.as_str()) {
            return Err(ingest_error(
                path,
                1,
                format!("expected state column {want:?} at position {}", 1 + i),
            ));
        }
    }
    for (i, want) in TRACE_FIXED_COLUMNS.iter().enumerate() {
        if names.get(y_pos + i).copied() != Some(*want) {
            return Err(ingest_error(
                path,
                1,
                format!("expected column {want:?} at position {}", y_pos + i),
            ));
        }
    }

    let mut file = TraceFile {
        order,
        start: NaiveDateTime::default(),
        step_seconds: 0,
        states: Vec::new(),
        y: Vec::new(),
        hvac_on: Vec::new(),
        q_hvac: Vec::new(),
        p_hvac: Vec::new(),
        p: Vec::new(),
        q_reactive: Vec::new(),
        modes: Vec::new(),
    };
    let mut prev: Option<NaiveDateTime> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| file_error(path, e))?;
        let line = record_line(&record);
        let ts = parse_ts_cell(path, &record, 0)?;
        match prev {
            None => file.start = ts,
            Some(p) => {
                let gap = ts.signed_duration_since(p).num_seconds();
                if gap <= 0 {
                    return Err(ingest_error(
                        path,
                        line,
                        TimeSeriesError::NonMonotonicTime { row },
                    ));
                }
                if file.step_seconds == 0 {
                    file.step_seconds = gap as u32;
                } else if gap != i64::from(file.step_seconds) {
                    return Err(ingest_error(
                        path,
                        line,
                        TimeSeriesError::IrregularCadence {
                            row,
                            gap_seconds: gap,
                            step_seconds: i64::from(file.step_seconds),
                        },
                    ));
                }
            }
        }
        prev = Some(ts);
        for (i, label) in expected.iter().enumerate() {
            file.states.push(parse_float(path, &record, 1 + i, label)?);
        }
        file.y.push(parse_float(path, &record, y_pos, "y")?);
        let on_cell = record
            .get(y_pos + 1)
            .ok_or_else(|| ingest_error(path, line, "row too short for hvac_on"))?;
        file.hvac_on.push(match on_cell {
            "0" => false,
            "1" => true,
            other => {
                return Err(ingest_error(
                    path,
                    line,
                    format!("hvac_on must be 0 or 1, got {other:?}"),
                ))
            }
        });
        file.q_hvac
            .push(parse_float(path, &record, y_pos + 2, "q_hvac")?);
        file.p_hvac
            .push(parse_float(path, &record, y_pos + 3, "p_hvac")?);
        file.p.push(parse_float(path, &record, y_pos + 4, "p")?);
        file.q_reactive
            .push(parse_float(path, &record, y_pos + 5, "q_reactive")?);
        let mode_cell = record
            .get(y_pos + 6)
            .ok_or_else(|| ingest_error(path, line, "row too short for hvac_mode"))?;
        let mode = HvacMode::parse(mode_cell)
            .ok_or_else(|| ingest_error(path, line, format!("unknown hvac_mode {mode_cell:?}")))?;
        if mode == HvacMode::Auto {
            return Err(ingest_error(path, line, "hvac_mode in a trace must be resolved"));
        }
        file.modes.push(mode);
    }
    if file.len() < 2 {
        return Err(file_error(
            path,
            format!("need at least 2 rows, found {}", file.len()),
        ));
    }
    Ok(file)
}

const MATRIX_HEADER: [&str; 15] = [
    "method",
    "order",
    "train_season",
    "test_season",
    "setpoint",
    "status",
    "t_z_accuracy",
    "t_z_mape",
    "t_z_points",
    "t_z_excluded",
    "p_hvac_accuracy",
    "p_hvac_mape",
    "p_hvac_bins",
    "p_hvac_excluded",
    "message",
];

/// Writes the full evaluation matrix, one row per cell in key order.
pub fn write_matrix_csv(path: &Path, matrix: &EvaluationMatrix) -> CliResult<()> {
    let mut writer = WriterBuilder::new()
        .from_path(path)
        .map_err(|e| file_error(path, e))?;
    writer
        .write_record(MATRIX_HEADER)
        .map_err(|e| file_error(path, e))?;
    for (key, outcome) in &matrix.cells {
        let mut record = vec![
            key.method.label().to_string(),
            key.order.label().to_string(),
            key.train_season.label().to_string(),
            key.test_season.label().to_string(),
            key.setpoint.label().to_string(),
        ];
        match outcome {
            CellOutcome::Scored { t_z, p_hvac } => {
                record.push("scored".into());
                record.push(format_exact(t_z.accuracy));
                record.push(format_exact(t_z.mape));
                record.push(t_z.n_points_used.to_string());
                record.push(t_z.excluded_zero_bins.to_string());
                record.push(format_exact(p_hvac.accuracy));
                record.push(format_exact(p_hvac.mape));
                record.push(p_hvac.n_points_used.to_string());
                record.push(p_hvac.excluded_zero_bins.to_string());
                record.push(String::new());
            }
            CellOutcome::EstimationFailed(msg) => {
                record.extend(failure_cells("estimation_failed", msg));
            }
            CellOutcome::SimulationFailed(msg) => {
                record.extend(failure_cells("simulation_failed", msg));
            }
            CellOutcome::ScoringFailed(msg) => {
                record.extend(failure_cells("scoring_failed", msg));
            }
        }
        writer.write_record(&record).map_err(|e| file_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn failure_cells(status: &str, message: &str) -> Vec<String> {
    let mut cells = vec![status.to_string()];
    cells.extend(std::iter::repeat_with(String::new).take(8));
    cells.push(message.to_string());
    cells
}

/// Reads a matrix file back; fit records are not part of the file so the
/// result carries cells only.
pub fn read_matrix_csv(path: &Path) -> CliResult<EvaluationMatrix> {
    use rctherm_core::estimate::EstimationMethod;
    use rctherm_core::evaluate::{AccuracyScore, ScenarioKey, SetpointClass};
    use rctherm_core::timeseries::Season;

    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| file_error(path, e))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != MATRIX_HEADER {
        return Err(file_error(path, "unrecognized matrix header"));
    }

    let mut matrix = EvaluationMatrix::new();
    for record in reader.records() {
        let record = record.map_err(|e| file_error(path, e))?;
        let line = record_line(&record);
        let get = |idx: usize, what: &str| -> CliResult<&str> {
            record
                .get(idx)
                .ok_or_else(|| ingest_error(path, line, format!("row too short for {what}")))
        };
        let method = EstimationMethod::parse(get(0, "method")?)
            .ok_or_else(|| ingest_error(path, line, "unknown method"))?;
        let order = ModelOrder::parse(get(1, "order")?)
            .ok_or_else(|| ingest_error(path, line, "unknown order"))?;
        let train_season = Season::parse(get(2, "train_season")?)
            .ok_or_else(|| ingest_error(path, line, "unknown train season"))?;
        let test_season = Season::parse(get(3, "test_season")?)
            .ok_or_else(|| ingest_error(path, line, "unknown test season"))?;
        let setpoint = SetpointClass::parse(get(4, "setpoint")?)
            .ok_or_else(|| ingest_error(path, line, "unknown setpoint"))?;
        let key = ScenarioKey {
            method,
            order,
            train_season,
            test_season,
            setpoint,
        };
        let status = get(5, "status")?.to_string();
        let message = get(14, "message")?.to_string();
        let outcome = match status.as_str() {
            "scored" => {
                let t_z = AccuracyScore {
                    accuracy: parse_float(path, &record, 6, "t_z_accuracy")?,
                    mape: parse_float(path, &record, 7, "t_z_mape")?,
                    n_points_used: parse_count(path, &record, 8, "t_z_points")?,
                    excluded_zero_bins: parse_count(path, &record, 9, "t_z_excluded")?,
                };
                let p_hvac = AccuracyScore {
                    accuracy: parse_float(path, &record, 10, "p_hvac_accuracy")?,
                    mape: parse_float(path, &record, 11, "p_hvac_mape")?,
                    n_points_used: parse_count(path, &record, 12, "p_hvac_bins")?,
                    excluded_zero_bins: parse_count(path, &record, 13, "p_hvac_excluded")?,
                };
                CellOutcome::Scored { t_z, p_hvac }
            }
            "estimation_failed" => CellOutcome::EstimationFailed(message),
            "simulation_failed" => CellOutcome::SimulationFailed(message),
            "scoring_failed" => CellOutcome::ScoringFailed(message),
            other => {
                return Err(ingest_error(path, line, format!("unknown status {other:?}")))
            }
        };
        matrix.cells.insert(key, outcome);
    }
    Ok(matrix)
}

fn parse_count(path: &Path, record: &StringRecord, idx: usize, column: &str) -> CliResult<usize> {
    let line = record_line(record);
    let cell = record
        .get(idx)
        .ok_or_else(|| ingest_error(path, line, format!("row too short for column {column}")))?;
    cell.parse()
        .map_err(|_| ingest_error(path, line, format!("unparseable {column} value {cell:?}")))
}

/// Writes the marginal-accuracy table.
pub fn write_marginals_csv(path: &Path, rows: &[MarginalRow]) -> CliResult<()> {
    let mut writer = WriterBuilder::new()
        .from_path(path)
        .map_err(|e| file_error(path, e))?;
    writer
        .write_record([
            "dimension",
            "group",
            "t_z_accuracy",
            "p_hvac_accuracy",
            "n_cells",
        ])
        .map_err(|e| file_error(path, e))?;
    for row in rows {
        writer
            .write_record([
                row.dimension.label().to_string(),
                row.group.clone(),
                format_exact(row.t_z_accuracy),
                format_exact(row.p_hvac_accuracy),
                row.n_cells.to_string(),
            ])
            .map_err(|e| file_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Writes one scored cell's truth and prediction series at native cadence.
pub fn write_cell_trace_csv(
    path: &Path,
    truth: &SimulationTrace,
    prediction: &SimulationTrace,
) -> CliResult<()> {
    let mut writer = WriterBuilder::new()
        .from_path(path)
        .map_err(|e| file_error(path, e))?;
    writer
        .write_record([
            "timestamp",
            "t_z_truth",
            "t_z_pred",
            "p_hvac_truth",
            "p_hvac_pred",
        ])
        .map_err(|e| file_error(path, e))?;
    let t_truth = truth.t_z_series();
    let t_pred = prediction.t_z_series();
    for k in 0..truth.len().min(prediction.len()) {
        writer
            .write_record([
                format_timestamp(
                    truth.start + chrono::Duration::seconds(k as i64 * i64::from(truth.step_seconds)),
                ),
                format_exact(t_truth[k]),
                format_exact(t_pred[k]),
                format_exact(truth.p_hvac[k]),
                format_exact(prediction.p_hvac[k]),
            ])
            .map_err(|e| file_error(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rctherm_core::models::ParameterVector;
    use rctherm_core::simulate::{forward_simulate, initial_state, ThermostatConfig};
    use rctherm_core::timeseries::{synthesize_weather, SyntheticWeatherProfile};
    use rctherm_core::HouseElectricalParams;
    use std::io::Write as _;

    fn write_file(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(1234.5678), "1234.57");
        assert_eq!(format_sig6(-1234.5678), "-1234.57");
        assert_eq!(format_sig6(0.012345678), "0.0123457");
        assert_eq!(format_sig6(900.0), "900.000");
        assert_eq!(format_sig6(0.0), "0.00000");
        assert_eq!(format_sig6(1.0e7), "10000000");
    }

    #[test]
    fn three_row_readback() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "w.csv",
            "timestamp,t_am,ghi,load\n\
             2017-01-01T00:00:00,10,0,300\n\
             2017-01-01T00:10:00,11,0,310\n\
             2017-01-01T00:20:00,12,0,320\n",
        );
        let table = ingest_weather_csv(&path, &InputConfig::default()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.step_seconds(), 600);
        assert_eq!(table.column(COL_AMBIENT).unwrap(), &[10.0, 11.0, 12.0]);
        assert_eq!(table.column(COL_LOAD).unwrap(), &[300.0, 310.0, 320.0]);
    }

    #[test]
    fn duplicate_timestamp_is_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "w.csv",
            "timestamp,t_am,ghi,load\n\
             2017-01-01T00:00:00,10,0,300\n\
             2017-01-01T00:00:00,11,0,310\n",
        );
        let err = ingest_weather_csv(&path, &InputConfig::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("w.csv:3"), "{text}");
        assert!(text.contains("non-monotonic"), "{text}");
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "w.csv", "timestamp,t_am,load\n2017-01-01T00:00:00,1,2\n");
        let err = ingest_weather_csv(&path, &InputConfig::default()).unwrap_err();
        assert!(err.to_string().contains("missing column: ghi"), "{err}");
    }

    #[test]
    fn short_gaps_interpolate() {
        let dir = tempfile::tempdir().unwrap();
        // 300 slots with one missing row: 1/300 < 1%.
        let mut text = String::from("timestamp,t_am,ghi,load\n");
        let start = NaiveDate::from_ymd_opt(2017, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        for k in 0..300i64 {
            if k == 150 {
                continue;
            }
            text.push_str(&format!(
                "{},{},0,100\n",
                format_timestamp(start + chrono::Duration::seconds(600 * k)),
                k as f64
            ));
        }
        let path = write_file(&dir, "w.csv", &text);
        let table = ingest_weather_csv(&path, &InputConfig::default()).unwrap();
        assert_eq!(table.len(), 300);
        let ambient = table.column(COL_AMBIENT).unwrap();
        assert!((ambient[150] - 150.0).abs() < 1e-12);
    }

    #[test]
    fn excessive_gaps_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("timestamp,t_am,ghi,load\n");
        let start = NaiveDate::from_ymd_opt(2017, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        for k in 0..100i64 {
            if (40..44).contains(&k) {
                continue;
            }
            text.push_str(&format!(
                "{},5,0,100\n",
                format_timestamp(start + chrono::Duration::seconds(600 * k))
            ));
        }
        let path = write_file(&dir, "w.csv", &text);
        let err = ingest_weather_csv(&path, &InputConfig::default()).unwrap_err();
        assert!(err.to_string().contains("too many gaps"), "{err}");
    }

    #[test]
    fn irregular_cadence_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "w.csv",
            "timestamp,t_am,ghi,load\n\
             2017-01-01T00:00:00,1,0,1\n\
             2017-01-01T00:10:00,1,0,1\n\
             2017-01-01T00:25:00,1,0,1\n",
        );
        let err = ingest_weather_csv(&path, &InputConfig::default()).unwrap_err();
        assert!(err.to_string().contains("irregular cadence"), "{err}");
    }

    #[test]
    fn leap_day_is_dropped_and_timeline_compressed() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("timestamp,t_am,ghi,load\n");
        let start = NaiveDate::from_ymd_opt(2016, 2, 28)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        // Feb 28 through Mar 1 of a leap year at 1-hour cadence: 72 rows in,
        // 48 rows out once Feb 29 vanishes. Values carry the raw row index
        // so compression is observable.
        for k in 0..72i64 {
            text.push_str(&format!(
                "{},{},0,100\n",
                format_timestamp(start + chrono::Duration::seconds(3600 * k)),
                k
            ));
        }
        let path = write_file(&dir, "w.csv", &text);
        let table = ingest_weather_csv(&path, &InputConfig::default()).unwrap();
        assert_eq!(table.len(), 48);
        assert_eq!(table.step_seconds(), 3600);
        // Mar 1 00:00 (raw row 48) lands one synthetic day after the start,
        // directly after Feb 28 23:00 (raw row 23).
        let ambient = table.column(COL_AMBIENT).unwrap();
        assert_eq!(ambient[23], 23.0);
        assert_eq!(ambient[24], 48.0);
        assert_eq!(ambient[47], 71.0);
    }

    #[test]
    fn weather_round_trip_keeps_six_digits() {
        let dir = tempfile::tempdir().unwrap();
        let profile = SyntheticWeatherProfile::default();
        let table = synthesize_weather(2, 600, &profile, 99).unwrap();
        let path = dir.path().join("weather.csv");
        let input = InputConfig::default();
        write_weather_csv(&path, &table, &input).unwrap();
        let back = ingest_weather_csv(&path, &input).unwrap();
        assert_eq!(back.len(), table.len());
        assert_eq!(back.step_seconds(), 600);
        let a = table.column(COL_AMBIENT).unwrap();
        let b = back.column(COL_AMBIENT).unwrap();
        for (x, y) in a.iter().zip(b) {
            // Six significant digits: relative error below 1e-5.
            let tol = 1e-5 * x.abs().max(1e-3);
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn trace_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let profile = SyntheticWeatherProfile {
            start: NaiveDate::from_ymd_opt(2017, 7, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            ..SyntheticWeatherProfile::default()
        };
        let table = synthesize_weather(2, 600, &profile, 5).unwrap();
        let exo = rctherm_core::timeseries::ExogenousConfig::default();
        let theta = ParameterVector::new(ModelOrder::Sm1, &[0.003, 3.0e6, 0.8, 1.0, 0.9]).unwrap();
        let thermostat = ThermostatConfig::new(22.0, HvacMode::Cooling);
        let trace = forward_simulate(
            &theta,
            &table,
            &exo,
            &thermostat,
            &HouseElectricalParams::default(),
            &initial_state(ModelOrder::Sm1, 25.0).unwrap(),
        )
        .unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let file = read_trace_csv(&path).unwrap();
        assert_eq!(file.order, ModelOrder::Sm1);
        assert_eq!(file.step_seconds, 600);
        assert_eq!(file.y, trace.y);
        assert_eq!(file.states, trace.states);
        assert_eq!(file.q_hvac, trace.q_hvac);
        assert_eq!(file.p_hvac, trace.p_hvac);
        assert_eq!(file.hvac_on, trace.hvac_on);
        let sliced = file.slice(10, 50).unwrap();
        assert_eq!(sliced.y, &trace.y[10..60]);
        assert_eq!(sliced.resolved_mode, HvacMode::Cooling);
        assert!(file.slice(200, 10_000).is_err());
    }

    #[test]
    fn corrupted_trace_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.csv",
            "timestamp,t_z,y,hvac_on,q_hvac,p_hvac,p,q_reactive,hvac_mode\n\
             2017-01-01T00:00:00,20,20,0,0,0,100,30,cooling\n\
             2017-01-01T00:10:00,20,NOT_A_NUMBER,0,0,0,100,30,cooling\n",
        );
        let err = read_trace_csv(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("t.csv:3"), "{text}");
        assert!(text.contains("NOT_A_NUMBER"), "{text}");
    }
}
