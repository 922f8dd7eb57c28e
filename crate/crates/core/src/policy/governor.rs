use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PolicyTable, Schedule};
use crate::error::{Error, Result};
use crate::model::Processor;
use crate::trace::Trace;

/// Moving-average MAPI predictor over the last `n` observations.
#[derive(Clone, Debug, PartialEq)]
pub struct MapiPredictor {
    window: VecDeque<f64>,
    capacity: usize,
}

impl MapiPredictor {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "predictor window must hold at least one value".into(),
            ));
        }
        Ok(MapiPredictor {
            window: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Stored values, oldest first.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn observe(&mut self, mapi: f64) -> Result<()> {
        if !(mapi.is_finite() && mapi >= 0.0) {
            return Err(Error::InvalidMapi(mapi));
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(mapi);
        Ok(())
    }

    pub fn predict(&self) -> Result<f64> {
        if self.window.is_empty() {
            return Err(Error::InsufficientHistory);
        }
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &v in &self.window {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        // Rounding in the sum can push the mean a few ulps outside the window.
        Ok((sum / self.window.len() as f64).clamp(lo, hi))
    }
}

/// Seeded additive measurement noise, uniform on `[-amplitude, amplitude]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementNoise {
    pub amplitude: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GovernorConfig {
    /// Number of past slices averaged by the predictor.
    pub window: usize,
    /// Re-select the frequency every this many slices.
    pub decision_interval: usize,
    pub noise: Option<MeasurementNoise>,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        GovernorConfig {
            window: 3,
            decision_interval: 1,
            noise: None,
        }
    }
}

/// The timeslice governor.
///
/// Slice 0 runs at `f_max`. At every decision point `i` (a positive multiple
/// of `decision_interval`) the MAPI of up to `window` previous slices is
/// averaged and classified through the table; between decision points the
/// previous frequency is held.
#[derive(Clone, Debug, PartialEq)]
pub struct Governor {
    table: PolicyTable,
    config: GovernorConfig,
}

impl Governor {
    pub fn new(table: PolicyTable, config: GovernorConfig) -> Result<Self> {
        if config.window == 0 {
            return Err(Error::InvalidArgument("window must be >= 1".into()));
        }
        if config.decision_interval == 0 {
            return Err(Error::InvalidArgument("decision_interval must be >= 1".into()));
        }
        if let Some(noise) = config.noise {
            if !(noise.amplitude.is_finite() && noise.amplitude >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "noise amplitude must be >= 0, got {}",
                    noise.amplitude
                )));
            }
        }
        Ok(Governor { table, config })
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }

    pub fn config(&self) -> &GovernorConfig {
        &self.config
    }

    pub fn schedule(&self, trace: &Trace, proc: &Processor) -> Result<Schedule> {
        self.table.check_against(proc)?;
        let mut predictor = MapiPredictor::new(self.config.window)?;
        let mut noise = self
            .config
            .noise
            .map(|n| (n.amplitude, ChaCha8Rng::seed_from_u64(n.seed)));
        let mut current = proc.f_max();
        let mut assignments = Vec::with_capacity(trace.len());

        for (i, slice) in trace.slices().iter().enumerate() {
            if i > 0 && i % self.config.decision_interval == 0 {
                current = self.table.classify(predictor.predict()?)?;
            }
            assignments.push(current);

            let mut observed = slice.mapi().map_err(|e| Error::Validation {
                index: i,
                message: e.to_string(),
            })?;
            if let Some((amplitude, rng)) = noise.as_mut() {
                if *amplitude > 0.0 {
                    observed = (observed + rng.random_range(-*amplitude..=*amplitude)).max(0.0);
                }
            }
            predictor.observe(observed)?;
        }
        Ok(Schedule::new(assignments))
    }
}

/// Runs the governor with window `n` and default settings otherwise.
pub fn governor(trace: &Trace, table: &PolicyTable, n: usize, proc: &Processor) -> Result<Schedule> {
    let config = GovernorConfig {
        window: n,
        ..GovernorConfig::default()
    };
    Governor::new(table.clone(), config)?.schedule(trace, proc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Frequency, SliceTiming};
    use crate::trace::SliceSample;

    fn trace_of(mapis: &[f64]) -> Trace {
        let slices = mapis
            .iter()
            .map(|&m| {
                let instr = 100_000_000u64;
                let acc = (m * instr as f64).round() as u64;
                SliceSample::new(instr, acc, SliceTiming::new(0.05, 0.05).unwrap()).unwrap()
            })
            .collect();
        Trace::new(slices, 0.1).unwrap()
    }

    fn mhz(s: &Schedule) -> Vec<u64> {
        s.frequencies().map(|f| f.hz() / 1_000_000).collect()
    }

    #[test]
    fn predictor_mean() {
        let mut p = MapiPredictor::new(3).unwrap();
        for v in [0.01, 0.02, 0.03] {
            p.observe(v).unwrap();
        }
        assert!((p.predict().unwrap() - 0.02).abs() < 1e-18);
    }

    #[test]
    fn predictor_warm_up_singleton() {
        let mut p = MapiPredictor::new(4).unwrap();
        p.observe(0.05).unwrap();
        assert_eq!(p.predict().unwrap(), 0.05);
    }

    #[test]
    fn predictor_equal_values_idempotent() {
        let mut p = MapiPredictor::new(3).unwrap();
        for _ in 0..3 {
            p.observe(0.1).unwrap();
        }
        assert_eq!(p.predict().unwrap(), 0.1);
    }

    #[test]
    fn predictor_empty_is_error() {
        let p = MapiPredictor::new(2).unwrap();
        assert!(matches!(p.predict(), Err(Error::InsufficientHistory)));
        assert!(MapiPredictor::new(0).is_err());
    }

    #[test]
    fn predictor_capacity_one_keeps_latest() {
        let mut p = MapiPredictor::new(1).unwrap();
        p.observe(0.3).unwrap();
        p.observe(0.7).unwrap();
        assert_eq!(p.values().collect::<Vec<_>>(), vec![0.7]);
    }

    #[test]
    fn predictor_saturates_and_evicts_fifo() {
        let mut p = MapiPredictor::new(2).unwrap();
        for v in [1.0, 2.0, 3.0] {
            p.observe(v).unwrap();
            assert!(p.len() <= 2);
        }
        assert_eq!(p.len(), 2);
        assert_eq!(p.values().collect::<Vec<_>>(), vec![2.0, 3.0]);
        assert!(p.observe(-1.0).is_err());
    }

    #[test]
    fn constant_low_mapi_stays_at_top() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let s = governor(&trace_of(&[0.002; 6]), &table, 3, &proc).unwrap();
        assert_eq!(mhz(&s), vec![2400; 6]);
    }

    #[test]
    fn single_slice_is_warm_up_only() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let s = governor(&trace_of(&[0.05]), &table, 3, &proc).unwrap();
        assert_eq!(mhz(&s), vec![2400]);
    }

    #[test]
    fn follows_moving_average() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        // predictions: -, .05, .05, .05, (.05+.05+.002)/3=.034, (.05+.002+.002)/3=.018, .002
        let s = governor(
            &trace_of(&[0.05, 0.05, 0.05, 0.002, 0.002, 0.002, 0.002]),
            &table,
            3,
            &proc,
        )
        .unwrap();
        assert_eq!(mhz(&s), vec![2400, 1200, 1200, 1200, 1600, 1600, 2400]);
    }

    #[test]
    fn decision_interval_holds_frequency() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let g = Governor::new(
            table,
            GovernorConfig {
                window: 1,
                decision_interval: 2,
                noise: None,
            },
        )
        .unwrap();
        let s = g.schedule(&trace_of(&[0.05, 0.002, 0.02, 0.007, 0.05]), &proc).unwrap();
        // decisions at slices 2 and 4 using the previous slice's MAPI
        assert_eq!(mhz(&s), vec![2400, 2400, 2400, 2400, 2200]);
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let t = trace_of(&[0.003, 0.02, 0.05, 0.007, 0.001]);
        let quiet = governor(&t, &table, 2, &proc).unwrap();
        let g = Governor::new(
            table,
            GovernorConfig {
                window: 2,
                decision_interval: 1,
                noise: Some(MeasurementNoise {
                    amplitude: 0.0,
                    seed: 4,
                }),
            },
        )
        .unwrap();
        assert_eq!(g.schedule(&t, &proc).unwrap(), quiet);
    }

    #[test]
    fn noise_is_seeded() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let t = trace_of(&[0.004; 50]);
        let cfg = |seed| GovernorConfig {
            window: 1,
            decision_interval: 1,
            noise: Some(MeasurementNoise { amplitude: 0.003, seed }),
        };
        let a = Governor::new(table.clone(), cfg(1))
            .unwrap()
            .schedule(&t, &proc)
            .unwrap();
        let b = Governor::new(table.clone(), cfg(1))
            .unwrap()
            .schedule(&t, &proc)
            .unwrap();
        assert_eq!(a, b);
        assert!(mhz(&a).contains(&2200));
    }

    #[test]
    fn table_processor_mismatch() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        let other = Processor::new(
            vec![crate::model::PState::new(Frequency::from_mhz(3000), 1.2).unwrap()],
            10.0,
            1e-9,
        )
        .unwrap();
        assert!(governor(&trace_of(&[0.01]), &table, 3, &other).is_err());
    }

    #[test]
    fn rejects_zero_window() {
        let proc = Processor::core2_quad();
        let table = PolicyTable::reference(&proc).unwrap();
        assert!(governor(&trace_of(&[0.01]), &table, 0, &proc).is_err());
    }
}
