//! Frequency-selection policies.
//!
//! [`Governor`] is the timeslice strategy: classify a moving-average MAPI
//! prediction through a [`PolicyTable`]. [`static_policy`] and
//! [`oracle_policy`] are evaluation baselines.

mod baseline;
mod governor;
mod table;

pub use baseline::{oracle_policy, static_policy};
pub use governor::{governor, Governor, GovernorConfig, MapiPredictor, MeasurementNoise};
pub use table::{Band, BandConfig, PolicyTable, TableConfig};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Frequency, PState, Processor};
use crate::trace::Trace;

/// A per-slice frequency assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    assignments: Vec<PState>,
}

impl Schedule {
    pub fn new(assignments: Vec<PState>) -> Self {
        Schedule { assignments }
    }

    pub fn assignments(&self) -> &[PState] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Frequency> + '_ {
        self.assignments.iter().map(PState::frequency)
    }
}

/// Policy selector as written on the command line:
/// `governor`, `static:<freq>` or `oracle[:<max_slowdown>]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicySpec {
    Governor,
    /// `None` stands for the processor's `f_max`.
    Static(Option<Frequency>),
    Oracle(Option<f64>),
}

impl PolicySpec {
    /// Builds the schedule for `trace`. `governor` is used only by
    /// [`PolicySpec::Governor`].
    pub fn schedule(&self, trace: &Trace, proc: &Processor, governor: &Governor) -> Result<Schedule> {
        match *self {
            PolicySpec::Governor => governor.schedule(trace, proc),
            PolicySpec::Static(freq) => {
                let p = match freq {
                    None => proc.f_max(),
                    Some(f) => proc.pstate(f).ok_or(Error::ForeignPState(f))?,
                };
                static_policy(trace, proc, &p)
            }
            PolicySpec::Oracle(bound) => oracle_policy(trace, proc, bound),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Governor => f.write_str("governor"),
            PolicySpec::Static(None) => f.write_str("static:fmax"),
            PolicySpec::Static(Some(freq)) => write!(f, "static:{}", freq.hz()),
            PolicySpec::Oracle(None) => f.write_str("oracle"),
            PolicySpec::Oracle(Some(b)) => write!(f, "oracle:{b}"),
        }
    }
}

/// Parses `2400000000`, `2400MHz`, `2.4GHz` (case-insensitive).
pub fn parse_frequency(s: &str) -> Result<Frequency> {
    let lower = s.trim().to_ascii_lowercase();
    let bad = || Error::InvalidArgument(format!("cannot parse frequency `{s}`"));
    let (num, scale) = if let Some(n) = lower.strip_suffix("ghz") {
        (n, 1e9)
    } else if let Some(n) = lower.strip_suffix("mhz") {
        (n, 1e6)
    } else if let Some(n) = lower.strip_suffix("hz") {
        (n, 1.0)
    } else {
        (lower.as_str(), 1.0)
    };
    let num = num.trim();
    if scale == 1.0 {
        return num.parse::<u64>().map(Frequency::from_hz).map_err(|_| bad());
    }
    let v: f64 = num.parse().map_err(|_| bad())?;
    let hz = (v * scale).round();
    if !(hz.is_finite() && hz >= 1.0) {
        return Err(bad());
    }
    Ok(Frequency::from_hz(hz as u64))
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), arg) {
            ("governor", None) => Ok(PolicySpec::Governor),
            ("static", Some(a)) if a.eq_ignore_ascii_case("fmax") => Ok(PolicySpec::Static(None)),
            ("static", Some(a)) => Ok(PolicySpec::Static(Some(parse_frequency(a)?))),
            ("oracle", None) => Ok(PolicySpec::Oracle(None)),
            ("oracle", Some(a)) if a.eq_ignore_ascii_case("none") => Ok(PolicySpec::Oracle(None)),
            ("oracle", Some(a)) => {
                let b: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad oracle slowdown bound `{a}`")))?;
                if !(b.is_finite() && b >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "oracle slowdown bound must be >= 0, got {b}"
                    )));
                }
                Ok(PolicySpec::Oracle(Some(b)))
            }
            _ => Err(Error::InvalidArgument(format!(
                "unknown policy `{s}` (expected governor, static:<freq> or oracle[:<max_slowdown>])"
            ))),
        }
    }
}
