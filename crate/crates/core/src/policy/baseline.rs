use super::Schedule;
use crate::error::{Error, Result};
use crate::model::{PState, Processor};
use crate::trace::Trace;

/// Runs every slice at `p`.
pub fn static_policy(trace: &Trace, proc: &Processor, p: &PState) -> Result<Schedule> {
    proc.check_member(p)?;
    Ok(Schedule::new(vec![*p; trace.len()]))
}

/// Per-slice minimum-energy P-state, optionally limited to P-states whose
/// slice duration stays within `(1 + max_slowdown)` of the `f_max` duration.
///
/// P-states are scanned from `f_max` down and only a strictly lower energy
/// replaces the incumbent, so ties go to the higher frequency. `f_max` always
/// satisfies the bound.
pub fn oracle_policy(trace: &Trace, proc: &Processor, max_slowdown: Option<f64>) -> Result<Schedule> {
    if let Some(b) = max_slowdown {
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::InvalidArgument(format!("max_slowdown must be >= 0, got {b}")));
        }
    }
    let fmax = proc.f_max();
    let assignments = trace
        .slices()
        .iter()
        .map(|slice| {
            let timing = slice.timing();
            let limit = max_slowdown.map(|b| (1.0 + b) * timing.base_duration());
            let mut best = fmax;
            let mut best_energy = proc.slice_energy(timing, &fmax)?;
            for p in &proc.pstates()[1..] {
                if let Some(limit) = limit {
                    if proc.slice_duration(timing, p)? > limit {
                        continue;
                    }
                }
                let e = proc.slice_energy(timing, p)?;
                if e < best_energy {
                    best = *p;
                    best_energy = e;
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule::new(assignments))
}
