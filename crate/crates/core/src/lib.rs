//! Grey-box RC-network thermal modeling of single-family houses.
//!
//! The crate covers the full identification loop at desk scale:
//!
//! * [`timeseries`] — exogenous weather/load tables, synthetic generation,
//!   season windows, sol-air temperatures.
//! * [`models`] — parameter vectors and state-space assembly for the
//!   one-, two-, and four-state RC networks (SM1/SM2/SM4), forward-Euler
//!   discretization, and the HVAC electrical relations.
//! * [`simulate`] — closed-loop simulation under a hysteresis thermostat:
//!   the four-state truth generator and reduced-order forward simulation.
//! * [`estimate`] — parameter fitting by output-error least squares,
//!   batch state smoothing, and Kalman-filter likelihood, on top of a
//!   bounded quasi-Newton optimizer with multi-start.
//! * [`evaluate`] — accuracy scoring (percentage accuracy = 100 − MAPE),
//!   3-hour HVAC power binning, and the season × setpoint robustness matrix.
//! * [`oracles`] — independent reference implementations (RTS smoother,
//!   symmetric eigensolver, high-order finite differences) used by the
//!   verification suites; not part of the modeling API.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only widens error-trait integration and pulls in the system
//! clock for chrono. All floating-point math goes through `num-traits`
//! so the core builds without a platform libm.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod linalg;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod simulate;
pub mod timeseries;

pub use error::{EstimationError, EvalError, ModelError, SimError, TimeSeriesError};
pub use estimate::{
    EstimationMethod, EstimationProblem, EstimationResult, IdentifiableAggregates,
    OptimizeOptions, TrainingData,
};
pub use evaluate::{
    AccuracyScore, CellOutcome, EvaluationMatrix, FitKey, MarginalDimension, MarginalRow,
    MatrixSpec, ScenarioKey, SetpointClass,
};
pub use models::{
    DiscreteModel, HouseElectricalParams, ModelOrder, ParameterVector, StateSpaceModel,
};
pub use simulate::{HvacMode, NoiseConfig, SimulationTrace, ThermostatConfig};
pub use timeseries::{
    ExogenousConfig, ExogenousRecord, Season, SeasonWindow, SyntheticWeatherProfile,
    TimeSeriesTable,
};
