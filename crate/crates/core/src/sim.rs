//! Applies a schedule to a trace and scores the result.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Frequency, Processor};
use crate::policy::Schedule;
use crate::sum::CompensatedSum;
use crate::trace::{emit_trace, Trace, TraceFormat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub frequency_hz: Frequency,
    /// Execution time of the slice at its assigned frequency.
    pub duration: f64,
    pub energy: f64,
    /// Switching latency charged before this slice (zero unless the
    /// frequency changed and the processor has a latency configured).
    pub overhead_time: f64,
    pub overhead_energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default)]
    pub policy: String,
    pub trace_fingerprint: String,
    pub processor_fingerprint: String,
    pub total_time: f64,
    pub total_energy: f64,
    pub transitions: usize,
    pub per_slice: Vec<SliceRecord>,
}

impl RunReport {
    pub fn with_policy(mut self, name: impl Into<String>) -> Self {
        self.policy = name.into();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Relative change of a run against a reference run of the same trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub perf_loss: f64,
    pub energy_savings: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical CSV encoding.
pub fn trace_fingerprint(trace: &Trace) -> String {
    let mut buf = Vec::new();
    emit_trace(trace, TraceFormat::Csv, &mut buf).expect("writing to a Vec cannot fail");
    sha256_hex(&buf)
}

pub fn processor_fingerprint(proc: &Processor) -> String {
    let text = proc.to_toml().expect("processor serializes");
    sha256_hex(text.as_bytes())
}

pub fn run(trace: &Trace, schedule: &Schedule, proc: &Processor) -> Result<RunReport> {
    if schedule.len() != trace.len() {
        return Err(Error::LengthMismatch {
            schedule: schedule.len(),
            trace: trace.len(),
        });
    }
    let latency = proc.transition_latency();
    let mut time = CompensatedSum::new();
    let mut energy = CompensatedSum::new();
    let mut transitions = 0;
    let mut per_slice = Vec::with_capacity(trace.len());
    let mut prev = None;

    for (slice, p) in trace.slices().iter().zip(schedule.assignments()) {
        let power = proc.power(p)?;
        let duration = proc.slice_duration(slice.timing(), p)?;
        let slice_energy = power * duration;

        let (overhead_time, overhead_energy) = match prev {
            Some(f) if f != p.frequency() => {
                transitions += 1;
                (latency, latency * power)
            }
            _ => (0.0, 0.0),
        };
        prev = Some(p.frequency());

        time.add(duration);
        time.add(overhead_time);
        energy.add(slice_energy);
        energy.add(overhead_energy);
        per_slice.push(SliceRecord {
            frequency_hz: p.frequency(),
            duration,
            energy: slice_energy,
            overhead_time,
            overhead_energy,
        });
    }

    Ok(RunReport {
        policy: String::new(),
        trace_fingerprint: trace_fingerprint(trace),
        processor_fingerprint: processor_fingerprint(proc),
        total_time: time.value(),
        total_energy: energy.value(),
        transitions,
        per_slice,
    })
}

pub fn compare(policy: &RunReport, reference: &RunReport) -> Result<Comparison> {
    if policy.trace_fingerprint != reference.trace_fingerprint {
        return Err(Error::FingerprintMismatch(format!(
            "trace {} vs {}",
            short(&policy.trace_fingerprint),
            short(&reference.trace_fingerprint)
        )));
    }
    if policy.processor_fingerprint != reference.processor_fingerprint {
        return Err(Error::FingerprintMismatch(format!(
            "processor {} vs {}",
            short(&policy.processor_fingerprint),
            short(&reference.processor_fingerprint)
        )));
    }
    Ok(Comparison {
        perf_loss: (policy.total_time - reference.total_time) / reference.total_time,
        energy_savings: (reference.total_energy - policy.total_energy) / reference.total_energy,
    })
}

fn short(fp: &str) -> &str {
    &fp[..fp.len().min(12)]
}

pub const SUMMARY_HEADER: &str = "trace_id,policy,total_time,total_energy,perf_loss,energy_savings,transitions";

/// One flat CSV row (no trailing newline) matching [`SUMMARY_HEADER`].
pub fn summary_row(trace_id: &str, report: &RunReport, cmp: &Comparison) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        trace_id,
        report.policy,
        report.total_time,
        report.total_energy,
        cmp.perf_loss,
        cmp.energy_savings,
        report.transitions
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SliceTiming;
    use crate::policy::static_policy;
    use crate::trace::SliceSample;

    fn trace() -> Trace {
        let s = |on, off| SliceSample::new(1000, 5, SliceTiming::new(on, off).unwrap()).unwrap();
        Trace::new(vec![s(0.06, 0.04), s(0.06, 0.04), s(0.01, 0.09)], 0.1).unwrap()
    }

    #[test]
    fn static_fmax_total_is_base_duration() {
        let proc = Processor::core2_quad();
        let t = trace();
        let r = run(&t, &static_policy(&t, &proc, &proc.f_max()).unwrap(), &proc).unwrap();
        let expected: f64 = t.slices().iter().map(|s| s.timing().base_duration()).sum();
        assert!((r.total_time - expected).abs() <= 1e-15);
        assert_eq!(r.transitions, 0);
        assert_eq!(r.per_slice[0], r.per_slice[1]);
    }

    #[test]
    fn length_mismatch() {
        let proc = Processor::core2_quad();
        let s = Schedule::new(vec![proc.f_max(); 2]);
        assert!(matches!(run(&trace(), &s, &proc), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn foreign_pstate() {
        let proc = Processor::core2_quad();
        let alien = crate::model::PState::new(Frequency::from_mhz(2000), 1.2).unwrap();
        let s = Schedule::new(vec![proc.f_max(), alien, proc.f_max()]);
        assert!(matches!(run(&trace(), &s, &proc), Err(Error::ForeignPState(_))));
    }

    #[test]
    fn transitions_charge_latency_at_destination_power() {
        let proc = Processor::core2_quad().with_transition_latency(0.001).unwrap();
        let p = proc.pstates();
        let s = Schedule::new(vec![p[0], p[3], p[3]]);
        let r = run(&trace(), &s, &proc).unwrap();
        assert_eq!(r.transitions, 1);
        assert_eq!(r.per_slice[1].overhead_time, 0.001);
        assert_eq!(r.per_slice[1].overhead_energy, 0.001 * proc.power(&p[3]).unwrap());
        let sum: f64 = r.per_slice.iter().map(|x| x.duration + x.overhead_time).sum();
        assert!((r.total_time - sum).abs() < 1e-15);
    }

    #[test]
    fn self_comparison_is_zero() {
        let proc = Processor::core2_quad();
        let t = trace();
        let r = run(&t, &static_policy(&t, &proc, &proc.pstates()[2]).unwrap(), &proc).unwrap();
        let c = compare(&r, &r).unwrap();
        assert_eq!((c.perf_loss, c.energy_savings), (0.0, 0.0));
    }

    #[test]
    fn doubled_time_same_energy() {
        let proc = Processor::core2_quad();
        let t = trace();
        let reference = run(&t, &static_policy(&t, &proc, &proc.f_max()).unwrap(), &proc).unwrap();
        let mut slow = reference.clone();
        slow.total_time *= 2.0;
        let c = compare(&slow, &reference).unwrap();
        assert_eq!(c.perf_loss, 1.0);
        assert_eq!(c.energy_savings, 0.0);
    }

    #[test]
    fn mismatched_fingerprints() {
        let proc = Processor::core2_quad();
        let a = trace();
        let b = Trace::new(a.slices()[..2].to_vec(), 0.1).unwrap();
        let ra = run(&a, &static_policy(&a, &proc, &proc.f_max()).unwrap(), &proc).unwrap();
        let rb = run(&b, &static_policy(&b, &proc, &proc.f_max()).unwrap(), &proc).unwrap();
        assert!(matches!(compare(&ra, &rb), Err(Error::FingerprintMismatch(_))));

        let other = Processor::core2_quad().with_transition_latency(1e-4).unwrap();
        let rc = run(&a, &static_policy(&a, &other, &other.f_max()).unwrap(), &other).unwrap();
        assert!(compare(&ra, &rc).is_err());
    }

    #[test]
    fn report_json_round_trip() {
        let proc = Processor::core2_quad();
        let t = trace();
        let r = run(&t, &static_policy(&t, &proc, &proc.pstates()[1]).unwrap(), &proc)
            .unwrap()
            .with_policy("static:2200000000");
        assert_eq!(RunReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }

    #[test]
    fn summary_row_columns() {
        let proc = Processor::core2_quad();
        let t = trace();
        let r = run(&t, &static_policy(&t, &proc, &proc.f_max()).unwrap(), &proc)
            .unwrap()
            .with_policy("static:fmax");
        let row = summary_row("t1", &r, &compare(&r, &r).unwrap());
        assert_eq!(row.split(',').count(), SUMMARY_HEADER.split(',').count());
        assert!(row.starts_with("t1,static:fmax,"));
        assert!(row.ends_with(",0,0,0"));
    }
}
