//! Seeded synthetic trace generation and NAS-like workload presets.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SliceSample, Trace, DEFAULT_INSTRUCTIONS, DEFAULT_TIMESLICE};
use crate::error::{Error, Result};
use crate::model::SliceTiming;

/// Maps a slice's MAPI to the fraction of its `f_max` duration spent stalled
/// off-chip.
///
/// The default piecewise curve is anchored on the default P-state ladder: at
/// MAPI 0.004, 0.01 and 0.04 the off-chip share is exactly the point where
/// dropping to 2.2, 1.6 and 1.2 GHz respectively costs 3% in slice time
/// (`1 - 0.03 / (f_max / f - 1)`), and the slice is fully memory-bound from
/// MAPI 0.08 on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffChipModel {
    /// `min(1, beta * mapi)`.
    Affine { beta: f64 },
    /// Linear interpolation between `[mapi, fraction]` knots, held constant
    /// past the last knot.
    Piecewise { knots: Vec<[f64; 2]> },
}

impl Default for OffChipModel {
    fn default() -> Self {
        OffChipModel::Piecewise {
            knots: vec![[0.0, 0.0], [0.004, 0.67], [0.01, 0.94], [0.04, 0.97], [0.08, 1.0]],
        }
    }
}

impl OffChipModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            OffChipModel::Affine { beta } => {
                if !(beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::InvalidWorkload(format!("beta must be >= 0, got {beta}")));
                }
            }
            OffChipModel::Piecewise { knots } => {
                let Some(first) = knots.first() else {
                    return Err(Error::InvalidWorkload("off-chip curve needs knots".into()));
                };
                if first[0] != 0.0 {
                    return Err(Error::InvalidWorkload("first knot must be at MAPI 0".into()));
                }
                for k in knots {
                    if !(k[0].is_finite() && (0.0..=1.0).contains(&k[1])) {
                        return Err(Error::InvalidWorkload(format!("bad knot {k:?}")));
                    }
                }
                for w in knots.windows(2) {
                    if !(w[1][0] > w[0][0] && w[1][1] >= w[0][1]) {
                        return Err(Error::InvalidWorkload(
                            "knots must ascend in MAPI with non-decreasing fraction".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Off-chip fraction in `[0, 1]`; non-decreasing in `mapi`.
    pub fn fraction(&self, mapi: f64) -> f64 {
        match self {
            OffChipModel::Affine { beta } => (beta * mapi).min(1.0),
            OffChipModel::Piecewise { knots } => {
                let last = knots[knots.len() - 1];
                if mapi <= knots[0][0] {
                    return knots[0][1];
                }
                if mapi >= last[0] {
                    return last[1];
                }
                let i = knots.partition_point(|k| k[0] <= mapi);
                let (a, b) = (knots[i - 1], knots[i]);
                let t = (mapi - a[0]) / (b[0] - a[0]);
                (a[1] + t * (b[1] - a[1])).clamp(a[1], b[1])
            }
        }
    }
}

fn default_instructions() -> u64 {
    DEFAULT_INSTRUCTIONS
}

fn default_timeslice() -> f64 {
    DEFAULT_TIMESLICE
}

/// A run of slices with a common MAPI distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub slices: usize,
    pub mapi_mean: f64,
    #[serde(default)]
    pub mapi_jitter: f64,
    #[serde(default = "default_instructions")]
    pub instructions: u64,
    #[serde(default)]
    pub off_chip: OffChipModel,
}

impl PhaseSpec {
    pub fn new(slices: usize, mapi_mean: f64, mapi_jitter: f64) -> Self {
        PhaseSpec {
            slices,
            mapi_mean,
            mapi_jitter,
            instructions: DEFAULT_INSTRUCTIONS,
            off_chip: OffChipModel::default(),
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        let bad = |m: String| Error::InvalidWorkload(format!("phase {i}: {m}"));
        if self.slices == 0 {
            return Err(bad("slice count must be positive".into()));
        }
        if !(self.mapi_mean.is_finite() && self.mapi_mean >= 0.0) {
            return Err(bad(format!("mapi_mean must be >= 0, got {}", self.mapi_mean)));
        }
        if !(self.mapi_jitter.is_finite() && self.mapi_jitter >= 0.0) {
            return Err(bad(format!("mapi_jitter must be >= 0, got {}", self.mapi_jitter)));
        }
        if self.instructions == 0 {
            return Err(bad("instructions per slice must be positive".into()));
        }
        self.off_chip.validate().map_err(|e| bad(e.to_string()))
    }

    /// Inclusive range of integer access counts whose MAPI lies in
    /// `[mean - jitter, mean + jitter]`.
    fn access_range(&self) -> Option<(i64, i64)> {
        let n = self.instructions as f64;
        let lo_mapi = self.mapi_mean - self.mapi_jitter;
        let hi_mapi = self.mapi_mean + self.mapi_jitter;
        let mut lo = (lo_mapi * n).ceil() as i64;
        let mut hi = (hi_mapi * n).floor() as i64;
        while (lo as f64) / n < lo_mapi {
            lo += 1;
        }
        while (lo - 1) as f64 / n >= lo_mapi {
            lo -= 1;
        }
        while (hi as f64) / n > hi_mapi {
            hi -= 1;
        }
        while (hi + 1) as f64 / n <= hi_mapi {
            hi += 1;
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// A full synthetic workload description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default = "default_timeslice")]
    pub timeslice_nominal: f64,
    pub phases: Vec<PhaseSpec>,
}

impl WorkloadSpec {
    pub fn new(phases: Vec<PhaseSpec>) -> Self {
        WorkloadSpec {
            timeslice_nominal: DEFAULT_TIMESLICE,
            phases,
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn total_slices(&self) -> usize {
        self.phases.iter().map(|p| p.slices).sum()
    }
}

/// Generates a trace phase by phase from one seeded stream.
///
/// Each slice's access count is drawn uniformly from the integers whose MAPI
/// lies within `mean ± jitter` (clamped at zero), so every generated MAPI
/// lies inside that interval exactly. Slice timing splits the nominal slice
/// length by the phase's off-chip model.
pub fn generate_synthetic(spec: &WorkloadSpec, seed: u64) -> Result<Trace> {
    if spec.phases.is_empty() {
        return Err(Error::InvalidWorkload("at least one phase is required".into()));
    }
    if !(spec.timeslice_nominal.is_finite() && spec.timeslice_nominal > 0.0) {
        return Err(Error::InvalidWorkload(format!(
            "timeslice_nominal must be positive, got {}",
            spec.timeslice_nominal
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slices = Vec::with_capacity(spec.total_slices());
    for (i, phase) in spec.phases.iter().enumerate() {
        phase.validate(i)?;
        let (lo, hi) = phase.access_range().ok_or_else(|| {
            Error::InvalidWorkload(format!(
                "phase {i}: no integer access count gives a MAPI within {} ± {} at {} instructions",
                phase.mapi_mean, phase.mapi_jitter, phase.instructions
            ))
        })?;
        for _ in 0..phase.slices {
            let accesses = rng.random_range(lo..=hi).max(0) as u64;
            let mapi = accesses as f64 / phase.instructions as f64;
            let off = phase.off_chip.fraction(mapi);
            let t = spec.timeslice_nominal;
            let timing = SliceTiming::new((1.0 - off) * t, off * t)?;
            slices.push(SliceSample::new(phase.instructions, accesses, timing)?);
        }
    }
    Trace::new(slices, spec.timeslice_nominal)
}

/// Synthetic stand-ins for four NAS parallel benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Conjugate gradient: memory-bound sparse mat-vec (MAPI 0.014 to 0.03)
    /// with short, lighter reduction phases.
    Cg,
    /// 3-D FFT: compute-heavy butterflies punctuated by memory-bound transposes.
    Ft,
    /// Multigrid: memory intensity follows the V-cycle between grid levels.
    Mg,
    /// Scalar pentadiagonal: alternating compute and sweep phases.
    Sp,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Cg, Preset::Ft, Preset::Mg, Preset::Sp];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cg => "cg",
            Preset::Ft => "ft",
            Preset::Mg => "mg",
            Preset::Sp => "sp",
        }
    }

    pub fn workload(self) -> WorkloadSpec {
        let p = PhaseSpec::new;
        let phases = match self {
            Preset::Cg => {
                let mut v = vec![p(8, 0.0070, 0.0015)];
                for _ in 0..6 {
                    v.push(p(40, 0.0220, 0.0080));
                    v.push(p(6, 0.0075, 0.0015));
                }
                v
            }
            Preset::Ft => {
                let mut v = vec![p(20, 0.0020, 0.0010)];
                for _ in 0..6 {
                    v.push(p(25, 0.0025, 0.0010));
                    v.push(p(25, 0.0160, 0.0040));
                }
                v
            }
            Preset::Mg => {
                let mut v = Vec::new();
                for _ in 0..5 {
                    v.push(p(15, 0.0030, 0.0008));
                    v.push(p(15, 0.0070, 0.0015));
                    v.push(p(25, 0.0200, 0.0060));
                    v.push(p(15, 0.0070, 0.0015));
                }
                v
            }
            Preset::Sp => {
                let mut v = Vec::new();
                for _ in 0..8 {
                    v.push(p(20, 0.0020, 0.0010));
                    v.push(p(10, 0.0070, 0.0015));
                    v.push(p(15, 0.0130, 0.0025));
                }
                v
            }
        };
        WorkloadSpec::new(phases)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(Preset::Cg),
            "ft" => Ok(Preset::Ft),
            "mg" => Ok(Preset::Mg),
            "sp" => Ok(Preset::Sp),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

/// Phase list of the named preset.
pub fn preset(name: &str) -> Result<WorkloadSpec> {
    Ok(name.parse::<Preset>()?.workload())
}
