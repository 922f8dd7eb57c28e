//! Processor model: P-states, on-chip/off-chip execution-time scaling and a
//! static + dynamic CMOS power model.
//!
//! Execution time of a slice at frequency `f` is split into an on-chip part
//! that scales with `f_max / f` and an off-chip (memory stall) part that does
//! not scale at all:
//!
//! ```text
//! t_f = t_on * (f_max / f) + t_off
//! ```
//!
//! Power is `P = P_static + C * V^2 * f`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A processor clock frequency in integer Hz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(u64);

impl Frequency {
    pub const fn from_hz(hz: u64) -> Self {
        Frequency(hz)
    }

    pub const fn from_mhz(mhz: u64) -> Self {
        Frequency(mhz * 1_000_000)
    }

    pub const fn hz(self) -> u64 {
        self.0
    }

    pub fn ghz(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(1_000_000) {
            write!(f, "{} GHz", self.ghz())
        } else {
            write!(f, "{} Hz", self.0)
        }
    }
}

/// An operating point of the processor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PState {
    #[serde(rename = "frequency_hz")]
    frequency: Frequency,
    voltage: f64,
}

impl PState {
    pub fn new(frequency: Frequency, voltage: f64) -> Result<Self> {
        if frequency.hz() == 0 {
            return Err(Error::InvalidPState("frequency must be positive".into()));
        }
        if !(voltage.is_finite() && voltage > 0.0) {
            return Err(Error::InvalidPState(format!(
                "voltage must be a positive number, got {voltage}"
            )));
        }
        Ok(PState { frequency, voltage })
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn voltage(&self) -> f64 {
        self.voltage
    }
}

impl fmt::Display for PState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {} V", self.frequency, self.voltage)
    }
}

/// On-chip time measured at `f_max` plus off-chip stall time, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceTiming {
    t_on: f64,
    t_off: f64,
}

impl SliceTiming {
    pub fn new(t_on: f64, t_off: f64) -> Result<Self> {
        if !(t_on.is_finite() && t_on >= 0.0) {
            return Err(Error::InvalidTiming(format!(
                "t_on must be finite and >= 0, got {t_on}"
            )));
        }
        if !(t_off.is_finite() && t_off >= 0.0) {
            return Err(Error::InvalidTiming(format!(
                "t_off must be finite and >= 0, got {t_off}"
            )));
        }
        if t_on + t_off <= 0.0 {
            return Err(Error::InvalidTiming("t_on + t_off must be positive".into()));
        }
        Ok(SliceTiming { t_on, t_off })
    }

    pub fn t_on(&self) -> f64 {
        self.t_on
    }

    pub fn t_off(&self) -> f64 {
        self.t_off
    }

    /// Duration at `f_max`.
    pub fn base_duration(&self) -> f64 {
        self.t_on + self.t_off
    }

    pub fn off_chip_fraction(&self) -> f64 {
        self.t_off / (self.t_on + self.t_off)
    }
}

/// Duration of a slice executed at `f`, given the processor's top frequency.
pub fn slice_duration(timing: &SliceTiming, f: &PState, f_max: &PState) -> Result<f64> {
    let freq = f.frequency.hz();
    let fmax = f_max.frequency.hz();
    if freq == 0 {
        return Err(Error::ZeroFrequency);
    }
    if freq > fmax {
        return Err(Error::AboveMax {
            freq: f.frequency,
            fmax: f_max.frequency,
        });
    }
    let scale = fmax as f64 / freq as f64;
    Ok(timing.t_on * scale + timing.t_off)
}

/// Default platform: a four-P-state quad-core desktop running 2.4 to 1.2 GHz.
///
/// Voltages and power coefficients are modeling defaults, not measurements.
/// Static power stands for everything a wall meter sees that does not scale
/// with core frequency (board, DRAM, disks, PSU losses, leakage).
pub const DEFAULT_PSTATES: [(u64, f64); 4] = [
    (2_400_000_000, 1.300),
    (2_200_000_000, 1.250),
    (1_600_000_000, 1.100),
    (1_200_000_000, 1.000),
];
pub const DEFAULT_STATIC_POWER: f64 = 120.0;
pub const DEFAULT_DYNAMIC_COEFFICIENT: f64 = 7.0e-9;

/// The modeled processor: its P-state ladder and power parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessorConfig", into = "ProcessorConfig")]
pub struct Processor {
    pstates: Vec<PState>,
    static_power: f64,
    dynamic_coefficient: f64,
    transition_latency: f64,
}

/// On-disk shape of a [`Processor`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessorConfig {
    pub static_power: f64,
    pub dynamic_coefficient: f64,
    #[serde(default)]
    pub transition_latency: f64,
    pub pstates: Vec<PState>,
}

impl TryFrom<ProcessorConfig> for Processor {
    type Error = Error;

    fn try_from(c: ProcessorConfig) -> Result<Self> {
        for p in &c.pstates {
            PState::new(p.frequency, p.voltage)?;
        }
        Processor::new(c.pstates, c.static_power, c.dynamic_coefficient)?.with_transition_latency(c.transition_latency)
    }
}

impl From<Processor> for ProcessorConfig {
    fn from(p: Processor) -> Self {
        ProcessorConfig {
            static_power: p.static_power,
            dynamic_coefficient: p.dynamic_coefficient,
            transition_latency: p.transition_latency,
            pstates: p.pstates,
        }
    }
}

impl Processor {
    /// `pstates` must be listed from `f_max` downwards.
    ///
    /// A zero `dynamic_coefficient` is accepted as a degenerate frequency
    /// independent model; otherwise power must strictly increase with
    /// frequency across the ladder.
    pub fn new(pstates: Vec<PState>, static_power: f64, dynamic_coefficient: f64) -> Result<Self> {
        if pstates.is_empty() {
            return Err(Error::InvalidProcessor("at least one P-state is required".into()));
        }
        if !(static_power.is_finite() && static_power >= 0.0) {
            return Err(Error::InvalidProcessor(format!(
                "static_power must be finite and >= 0, got {static_power}"
            )));
        }
        if !(dynamic_coefficient.is_finite() && dynamic_coefficient >= 0.0) {
            return Err(Error::InvalidProcessor(format!(
                "dynamic_coefficient must be finite and >= 0, got {dynamic_coefficient}"
            )));
        }
        for pair in pstates.windows(2) {
            let (hi, lo) = (&pair[0], &pair[1]);
            if lo.frequency >= hi.frequency {
                return Err(Error::InvalidProcessor(format!(
                    "P-state frequencies must be strictly descending ({} then {})",
                    hi.frequency, lo.frequency
                )));
            }
            if lo.voltage > hi.voltage {
                return Err(Error::InvalidProcessor(format!(
                    "voltage must not increase as frequency drops ({} V at {} then {} V at {})",
                    hi.voltage, hi.frequency, lo.voltage, lo.frequency
                )));
            }
        }
        let proc = Processor {
            pstates,
            static_power,
            dynamic_coefficient,
            transition_latency: 0.0,
        };
        if dynamic_coefficient > 0.0 {
            for pair in proc.pstates.windows(2) {
                let (hi, lo) = (proc.raw_power(&pair[0]), proc.raw_power(&pair[1]));
                if !(hi > lo) {
                    return Err(Error::InvalidProcessor(format!(
                        "power is not strictly increasing with frequency ({} W at {}, {} W at {})",
                        lo, pair[1].frequency, hi, pair[0].frequency
                    )));
                }
            }
        }
        Ok(proc)
    }

    /// Fixed time charged whenever consecutive slices run at different
    /// frequencies. Zero disables the overhead.
    pub fn with_transition_latency(mut self, seconds: f64) -> Result<Self> {
        if !(seconds.is_finite() && seconds >= 0.0) {
            return Err(Error::InvalidProcessor(format!(
                "transition_latency must be finite and >= 0, got {seconds}"
            )));
        }
        self.transition_latency = seconds;
        Ok(self)
    }

    /// The default quad-core desktop preset (see [`DEFAULT_PSTATES`]).
    pub fn core2_quad() -> Self {
        let pstates = DEFAULT_PSTATES
            .iter()
            .map(|&(hz, v)| PState::new(Frequency::from_hz(hz), v).expect("valid preset"))
            .collect();
        Processor::new(pstates, DEFAULT_STATIC_POWER, DEFAULT_DYNAMIC_COEFFICIENT).expect("valid preset")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn pstates(&self) -> &[PState] {
        &self.pstates
    }

    pub fn f_max(&self) -> PState {
        self.pstates[0]
    }

    pub fn lowest(&self) -> PState {
        *self.pstates.last().expect("non-empty")
    }

    pub fn static_power(&self) -> f64 {
        self.static_power
    }

    pub fn dynamic_coefficient(&self) -> f64 {
        self.dynamic_coefficient
    }

    pub fn transition_latency(&self) -> f64 {
        self.transition_latency
    }

    /// Looks up the P-state running at `freq`.
    pub fn pstate(&self, freq: Frequency) -> Option<PState> {
        self.pstates.iter().copied().find(|p| p.frequency == freq)
    }

    pub fn index_of(&self, p: &PState) -> Option<usize> {
        self.pstates.iter().position(|q| q == p)
    }

    /// Checks `p` is exactly one of this processor's operating points.
    pub fn check_member(&self, p: &PState) -> Result<usize> {
        self.index_of(p).ok_or(Error::ForeignPState(p.frequency))
    }

    fn raw_power(&self, p: &PState) -> f64 {
        self.static_power + self.dynamic_coefficient * p.voltage * p.voltage * p.frequency.hz() as f64
    }

    pub fn power(&self, p: &PState) -> Result<f64> {
        self.check_member(p)?;
        Ok(self.raw_power(p))
    }

    pub fn slice_duration(&self, timing: &SliceTiming, f: &PState) -> Result<f64> {
        slice_duration(timing, f, &self.f_max())
    }

    /// Energy of one slice at `f`: power times the scaled duration.
    pub fn slice_energy(&self, timing: &SliceTiming, f: &PState) -> Result<f64> {
        Ok(self.power(f)? * self.slice_duration(timing, f)?)
    }
}

impl Default for Processor {
    fn default() -> Self {
        Processor::core2_quad()
    }
}
