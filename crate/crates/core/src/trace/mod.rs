//! Per-timeslice counter traces.

mod format;
mod synth;

pub use format::{emit_trace, load_trace, TraceFormat, CSV_HEADER};
pub use synth::{generate_synthetic, preset, OffChipModel, PhaseSpec, Preset, WorkloadSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SliceTiming;

pub const DEFAULT_TIMESLICE: f64 = 0.1;
pub const DEFAULT_INSTRUCTIONS: u64 = 100_000_000;

/// One timeslice of counter data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSample {
    instructions: u64,
    memory_accesses: u64,
    timing: SliceTiming,
}

impl SliceSample {
    pub fn new(instructions: u64, memory_accesses: u64, timing: SliceTiming) -> Result<Self> {
        if memory_accesses > 0 && instructions == 0 {
            return Err(Error::ZeroInstructions);
        }
        Ok(SliceSample {
            instructions,
            memory_accesses,
            timing,
        })
    }

    pub fn instructions(&self) -> u64 {
        self.instructions
    }

    pub fn memory_accesses(&self) -> u64 {
        self.memory_accesses
    }

    pub fn timing(&self) -> &SliceTiming {
        &self.timing
    }

    /// Memory accesses per instruction.
    pub fn mapi(&self) -> Result<f64> {
        if self.instructions == 0 {
            return Err(Error::ZeroInstructions);
        }
        Ok(self.memory_accesses as f64 / self.instructions as f64)
    }
}

/// An ordered, non-empty sequence of equally sized timeslices.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    slices: Vec<SliceSample>,
    timeslice_nominal: f64,
}

impl Trace {
    pub fn new(slices: Vec<SliceSample>, timeslice_nominal: f64) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidArgument("a trace needs at least one slice".into()));
        }
        if !(timeslice_nominal.is_finite() && timeslice_nominal > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "timeslice_nominal must be positive, got {timeslice_nominal}"
            )));
        }
        Ok(Trace {
            slices,
            timeslice_nominal,
        })
    }

    pub fn slices(&self) -> &[SliceSample] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn timeslice_nominal(&self) -> f64 {
        self.timeslice_nominal
    }

    /// MAPI of every slice, in order.
    pub fn mapi_series(&self) -> Result<Vec<f64>> {
        self.slices.iter().map(SliceSample::mapi).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(instr: u64, acc: u64) -> SliceSample {
        SliceSample::new(instr, acc, SliceTiming::new(0.05, 0.05).unwrap()).unwrap()
    }

    #[test]
    fn mapi_ratio() {
        assert_eq!(sample(1_000_000, 2_000).mapi().unwrap(), 0.002);
        assert_eq!(sample(1_000_000, 0).mapi().unwrap(), 0.0);
        assert_eq!(sample(1_000_000, 50_000).mapi().unwrap(), 0.05);
    }

    #[test]
    fn mapi_requires_instructions() {
        assert!(matches!(
            SliceSample::new(0, 5, SliceTiming::new(0.1, 0.0).unwrap()),
            Err(Error::ZeroInstructions)
        ));
        assert!(matches!(sample(0, 0).mapi(), Err(Error::ZeroInstructions)));
    }

    #[test]
    fn empty_trace_rejected() {
        assert!(Trace::new(vec![], 0.1).is_err());
        assert!(Trace::new(vec![sample(1, 0)], 0.0).is_err());
    }
}
