//! Trace-driven simulation of a timeslice DVFS strategy.
//!
//! Each timeslice's memory accesses per instruction (MAPI) is measured, the
//! next slice's MAPI is predicted with a moving average, and a calibrated
//! table maps the prediction to a P-state. Runs are scored for execution
//! time and energy against static and oracle baselines.
//!
//! - [`model`]: P-states, execution-time scaling, power model.
//! - [`trace`]: slice counter traces, CSV/JSON formats, synthetic presets.
//! - [`policy`]: MAPI table, predictor, governor, baselines.
//! - [`calibration`]: table derivation from frequency-sweep profiles.
//! - [`sim`]: schedule evaluation and comparison.

pub mod calibration;
pub mod error;
pub mod model;
pub mod policy;
pub mod sim;
pub mod sum;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Frequency, PState, Processor, SliceTiming};
pub use policy::{Governor, GovernorConfig, PolicySpec, PolicyTable, Schedule};
pub use sim::{compare, run, Comparison, RunReport};
pub use trace::{SliceSample, Trace, TraceFormat};
