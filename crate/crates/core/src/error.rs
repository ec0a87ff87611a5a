//! Error types for the modeling, simulation, and estimation layers.

use alloc::string::String;
use thiserror::Error;

/// Errors raised while building or manipulating exogenous time-series tables.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeSeriesError {
    /// A required column is absent from the source.
    #[error("missing column: {0}")]
    MissingColumn(String),
    /// A timestamp cell could not be parsed.
    #[error("unparseable timestamp at row {row}: {text}")]
    UnparseableTimestamp { row: usize, text: String },
    /// Timestamps are not strictly increasing (duplicates included).
    #[error("non-monotonic time at row {row}")]
    NonMonotonicTime { row: usize },
    /// Row spacing is not a whole multiple of the detected cadence.
    #[error("irregular cadence at row {row}: gap of {gap_seconds} s is not a multiple of {step_seconds} s")]
    IrregularCadence {
        row: usize,
        gap_seconds: i64,
        step_seconds: i64,
    },
    /// More than the permitted fraction of rows is missing.
    #[error("too many gaps: {missing} of {total} rows missing (limit {limit_percent}%)")]
    TooManyGaps {
        missing: usize,
        total: usize,
        limit_percent: f64,
    },
    /// A value is NaN or infinite after ingestion.
    #[error("non-finite value in column {column} at row {row}")]
    NonFiniteValue { column: String, row: usize },
    /// Table construction invariants violated (length mismatch, short series).
    #[error("invalid table: {0}")]
    InvalidTable(String),
    /// Synthetic weather profile with negative amplitudes or spreads.
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    /// Requested slice does not fit the table or its season bounds.
    #[error("requested window out of range: {0}")]
    OutOfRange(String),
    /// Resampling target is neither a multiple nor a divisor of the cadence.
    #[error("incompatible step: cannot resample {from_seconds} s to {to_seconds} s")]
    IncompatibleStep { from_seconds: u32, to_seconds: u32 },
}

/// Errors raised by model assembly and discretization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A resistance or capacitance is zero, negative, or non-finite.
    #[error("non-positive parameter {name} = {value}")]
    NonPositiveParameter { name: String, value: f64 },
    /// A gain coefficient is NaN or infinite.
    #[error("non-finite parameter {name}")]
    NonFiniteParameter { name: String },
    /// Wrong number of parameter values for the model order.
    #[error("expected {expected} parameters for {order}, got {got}")]
    WrongParameterCount {
        order: &'static str,
        expected: usize,
        got: usize,
    },
    /// Forward-Euler transition matrix has spectral radius >= 1.
    #[error("unstable discretization at t_s = {t_s} s (spectral radius ~ {radius_estimate:.3})")]
    UnstableDiscretization { t_s: f64, radius_estimate: f64 },
    /// Discretization step must be strictly positive and finite.
    #[error("invalid time step {0}")]
    InvalidStep(f64),
}

/// Errors raised during closed-loop simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Initial state has the wrong dimension or non-finite entries.
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    /// Thermostat or electrical configuration out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// States left the representable range mid-run.
    #[error("state diverged at step {step}")]
    Diverged { step: usize },
}

/// Errors raised by the estimation front end and optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    /// Training series shorter than 10 samples per parameter.
    #[error("trace too short: {len} samples for {n_params} parameters (need >= {min})")]
    TraceTooShort {
        len: usize,
        n_params: usize,
        min: usize,
    },
    /// Problem arrays disagree in length or dimension.
    #[error("inconsistent problem: {0}")]
    InconsistentProblem(String),
    /// Noise covariance not usable (non-PD process/measurement covariance).
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    /// Kalman recursion produced a non-positive or non-finite innovation variance.
    #[error("filter divergence at step {step}")]
    FilterDivergence { step: usize },
    /// Every multi-start attempt failed to produce a usable iterate.
    #[error("no start converged ({attempted} attempted)")]
    NoConvergedStart { attempted: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors raised while scoring traces and building the evaluation matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// Truth and prediction series differ in length or are empty.
    #[error("length mismatch: truth {truth} vs prediction {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    /// Every point fell below the zero floor; MAPE undefined.
    #[error("all {0} points excluded by the zero floor")]
    AllPointsExcluded(usize),
    /// Bin length is not a whole number of samples at this cadence.
    #[error("bin of {bin_seconds} s is not a multiple of the {step_seconds} s cadence")]
    IncompatibleBin { bin_seconds: u32, step_seconds: u32 },
    /// No cells available for the requested marginal grouping.
    #[error("empty group: {0}")]
    EmptyGroup(String),
    /// Matrix configuration invalid (e.g. setpoint outside the 18/22/26 classes).
    #[error("invalid matrix spec: {0}")]
    InvalidSpec(String),
}
