//! Offline derivation of a [`PolicyTable`] from frequency-sweep profiles.
//!
//! Every profiled slice is replayed at every P-state to record its slowdown
//! against `f_max`. Candidate MAPI bands come from a threshold grid; each
//! band gets the lowest frequency whose worst slowdown inside the band stays
//! within `1 + max_loss`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Frequency, Processor};
use crate::policy::{Band, PolicyTable};
use crate::trace::{generate_synthetic, PhaseSpec, Preset, Trace, WorkloadSpec};

/// Measured slowdowns may dip this far below 1 before being rejected.
pub const SLOWDOWN_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_LOSS: f64 = 0.03;

pub const PROFILE_HEADER: &str = "mapi,frequency_hz,slowdown";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub mapi: f64,
    pub frequency_hz: Frequency,
    /// Duration at this frequency over duration at `f_max`.
    pub slowdown: f64,
}

impl ProfilePoint {
    pub fn new(mapi: f64, frequency_hz: Frequency, slowdown: f64) -> Result<Self> {
        if !(mapi.is_finite() && mapi >= 0.0) {
            return Err(Error::InvalidMapi(mapi));
        }
        if !(slowdown.is_finite() && slowdown >= 1.0 - SLOWDOWN_EPSILON) {
            return Err(Error::Calibration(format!(
                "slowdown must be >= 1 (within {SLOWDOWN_EPSILON}), got {slowdown}"
            )));
        }
        Ok(ProfilePoint {
            mapi,
            frequency_hz,
            slowdown,
        })
    }
}

/// Simulated profiling: each slice of each trace at each P-state.
pub fn sweep(traces: &[Trace], proc: &Processor) -> Result<Vec<ProfilePoint>> {
    if traces.is_empty() {
        return Err(Error::Calibration("no traces to profile".into()));
    }
    let fmax = proc.f_max();
    let mut points = Vec::with_capacity(traces.iter().map(Trace::len).sum::<usize>() * proc.pstates().len());
    for trace in traces {
        for slice in trace.slices() {
            let mapi = slice.mapi()?;
            let base = proc.slice_duration(slice.timing(), &fmax)?;
            for p in proc.pstates() {
                let slowdown = proc.slice_duration(slice.timing(), p)? / base;
                points.push(ProfilePoint::new(mapi, p.frequency(), slowdown)?);
            }
        }
    }
    Ok(points)
}

/// `{0.001 i : i = 1..=100}` followed by `inf`.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 1000.0).chain([f64::INFINITY]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    pub table: PolicyTable,
    /// Non-fatal repairs applied to the data-driven choice.
    pub warnings: Vec<String>,
}

pub fn derive_table(points: &[ProfilePoint], proc: &Processor, max_loss: f64, grid: &[f64]) -> Result<Derivation> {
    if !(max_loss.is_finite() && max_loss >= 0.0) {
        return Err(Error::Calibration(format!("max_loss must be >= 0, got {max_loss}")));
    }
    let mut grid = grid.to_vec();
    if grid.is_empty() {
        return Err(Error::Calibration("threshold grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
        return Err(Error::Calibration(
            "grid must be positive and strictly ascending".into(),
        ));
    }
    if grid[grid.len() - 1] != f64::INFINITY {
        grid.push(f64::INFINITY);
    }
    if points.is_empty() {
        return Err(Error::Calibration("no profile points".into()));
    }

    let n_states = proc.pstates().len();
    // worst[band][pstate]: worst slowdown seen, None when never profiled.
    let mut worst: Vec<Vec<Option<f64>>> = vec![vec![None; n_states]; grid.len()];
    let mut populated = vec![false; grid.len()];
    for pt in points {
        let p = proc
            .pstate(pt.frequency_hz)
            .ok_or(Error::ForeignPState(pt.frequency_hz))?;
        let s = proc.index_of(&p).expect("looked up from proc");
        let band = grid.partition_point(|&g| g < pt.mapi);
        populated[band] = true;
        let w = &mut worst[band][s];
        *w = Some(w.map_or(pt.slowdown, |v| v.max(pt.slowdown)));
    }

    let bound = 1.0 + max_loss;
    let mut warnings = Vec::new();
    // Indices grow as frequency drops, so monotone targets never decrease.
    let mut targets: Vec<usize> = Vec::with_capacity(grid.len());
    for (band, row) in worst.iter().enumerate() {
        let prev = targets.last().copied();
        let choice = if populated[band] {
            let wanted = (0..n_states)
                .rev()
                .find(|&s| row[s].is_some_and(|w| w <= bound))
                .unwrap_or(0);
            match prev {
                Some(prev) if wanted < prev => {
                    warnings.push(format!(
                        "band ending at MAPI {} wanted {} above its lower neighbour; clamped to {}",
                        grid[band],
                        proc.pstates()[wanted].frequency(),
                        proc.pstates()[prev].frequency()
                    ));
                    prev
                }
                _ => wanted,
            }
        } else {
            prev.unwrap_or(0)
        };
        targets.push(choice);
    }

    let mut bands: Vec<Band> = Vec::new();
    for (upper, &s) in grid.iter().zip(&targets) {
        let target = proc.pstates()[s];
        match bands.last_mut() {
            Some(last) if last.target == target => last.upper = *upper,
            _ => bands.push(Band { upper: *upper, target }),
        }
    }
    Ok(Derivation {
        table: PolicyTable::new(bands)?,
        warnings,
    })
}

/// Microbenchmark ramp covering MAPI 0 to 0.1 in 0.001-wide steps, each
/// step centred between grid points.
pub fn profiling_ramp() -> WorkloadSpec {
    WorkloadSpec::new(
        (0..100)
            .map(|i| PhaseSpec::new(5, (i as f64 + 0.5) / 1000.0, 0.0004))
            .collect(),
    )
}

/// Workloads profiled by the simulated calibration: the ramp plus the four
/// NAS-like presets.
pub fn profiling_workloads() -> Vec<WorkloadSpec> {
    std::iter::once(profiling_ramp())
        .chain(Preset::ALL.iter().map(|p| p.workload()))
        .collect()
}

/// Generates the profiling workloads with consecutive seeds and sweeps them.
pub fn simulated_profile(proc: &Processor, seed: u64) -> Result<Vec<ProfilePoint>> {
    let traces = profiling_workloads()
        .iter()
        .enumerate()
        .map(|(i, w)| generate_synthetic(w, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    sweep(&traces, proc)
}

pub fn emit_profile<W: Write>(points: &[ProfilePoint], mut sink: W) -> Result<()> {
    let mut out = String::with_capacity(40 * (points.len() + 1));
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.mapi, p.frequency_hz.hz(), p.slowdown));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_profile<R: Read>(source: R) -> Result<Vec<ProfilePoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if header.iter().ne(PROFILE_HEADER.split(',')) {
        return Err(Error::Parse {
            line: 1,
            column: "header".into(),
            message: format!("expected `{PROFILE_HEADER}`"),
        });
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            column: "record".into(),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let err = |column: &str, message: String| Error::Parse {
            line,
            column: column.into(),
            message,
        };
        let raw = |i: usize| record.get(i).unwrap_or_default();
        let mapi: f64 = raw(0).parse().map_err(|e| err("mapi", format!("{e}")))?;
        let hz: u64 = raw(1).parse().map_err(|e| err("frequency_hz", format!("{e}")))?;
        let slowdown: f64 = raw(2).parse().map_err(|e| err("slowdown", format!("{e}")))?;
        points
            .push(ProfilePoint::new(mapi, Frequency::from_hz(hz), slowdown).map_err(|e| err("record", e.to_string()))?);
    }
    Ok(points)
}
