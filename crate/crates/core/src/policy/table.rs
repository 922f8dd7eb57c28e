use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Frequency, PState, Processor};

/// One MAPI band: `(previous upper, upper]`, or `[0, upper]` for the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub upper: f64,
    pub target: PState,
}

/// MAPI bands mapped to target P-states.
///
/// Bands are right-closed and partition `[0, inf)`; target frequencies never
/// increase as memory intensity grows.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyTable {
    bands: Vec<Band>,
}

/// Upper bounds of the default table, for 2.4, 2.2, 1.6 and 1.2 GHz.
pub const REFERENCE_BOUNDS: [f64; 3] = [0.004, 0.01, 0.04];
const REFERENCE_MHZ: [u64; 4] = [2400, 2200, 1600, 1200];

impl PolicyTable {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        let Some(last) = bands.last() else {
            return Err(Error::InvalidTable("at least one band is required".into()));
        };
        if last.upper != f64::INFINITY {
            return Err(Error::InvalidTable("the last band must be unbounded (inf)".into()));
        }
        let mut prev = 0.0;
        for b in &bands {
            if !(b.upper > prev) {
                return Err(Error::InvalidTable(format!(
                    "upper bounds must be positive and strictly ascending ({} after {})",
                    b.upper, prev
                )));
            }
            prev = b.upper;
        }
        for w in bands.windows(2) {
            if w[1].target.frequency() > w[0].target.frequency() {
                return Err(Error::InvalidTable(format!(
                    "target frequency rises from {} to {} at MAPI {}",
                    w[0].target.frequency(),
                    w[1].target.frequency(),
                    w[0].upper
                )));
            }
        }
        Ok(PolicyTable { bands })
    }

    /// The reference four-band table on `proc`, which must offer 2.4, 2.2,
    /// 1.6 and 1.2 GHz.
    pub fn reference(proc: &Processor) -> Result<Self> {
        let uppers = REFERENCE_BOUNDS.iter().copied().chain([f64::INFINITY]);
        let bands = uppers
            .zip(REFERENCE_MHZ)
            .map(|(upper, mhz)| {
                let f = Frequency::from_mhz(mhz);
                let target = proc.pstate(f).ok_or(Error::ForeignPState(f))?;
                Ok(Band { upper, target })
            })
            .collect::<Result<Vec<_>>>()?;
        PolicyTable::new(bands)
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Finite band boundaries, ascending.
    pub fn thresholds(&self) -> Vec<f64> {
        self.bands[..self.bands.len() - 1].iter().map(|b| b.upper).collect()
    }

    pub fn classify(&self, mapi: f64) -> Result<PState> {
        if !(mapi >= 0.0) {
            return Err(Error::InvalidMapi(mapi));
        }
        let i = self.bands.partition_point(|b| b.upper < mapi);
        Ok(self.bands[i].target)
    }

    /// Every target must be one of `proc`'s P-states.
    pub fn check_against(&self, proc: &Processor) -> Result<()> {
        for b in &self.bands {
            proc.check_member(&b.target)?;
        }
        Ok(())
    }

    pub fn to_config(&self) -> TableConfig {
        TableConfig {
            bands: self
                .bands
                .iter()
                .map(|b| BandConfig {
                    upper_bound: b.upper,
                    frequency_hz: b.target.frequency(),
                })
                .collect(),
        }
    }

    pub fn from_toml(s: &str, proc: &Processor) -> Result<Self> {
        TableConfig::from_toml(s)?.resolve(proc)
    }

    pub fn to_toml(&self) -> Result<String> {
        self.to_config().to_toml()
    }
}

/// On-disk table: `(upper_bound, frequency_hz)` pairs, the last bound
/// written as `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub bands: Vec<BandConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    #[serde(serialize_with = "ser_bound", deserialize_with = "de_bound")]
    pub upper_bound: f64,
    pub frequency_hz: Frequency,
}

fn ser_bound<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_bound<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Int(i64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Int(v) => Ok(v as f64),
        Raw::Text(t) if t.trim().eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
        Raw::Text(t) => t
            .trim()
            .parse()
            .map_err(|_| serde::de::Error::custom(format!("bad upper bound `{t}`"))),
    }
}

impl TableConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Binds frequencies to `proc`'s P-states and validates the table.
    pub fn resolve(&self, proc: &Processor) -> Result<PolicyTable> {
        let bands = self
            .bands
            .iter()
            .map(|b| {
                let target = proc
                    .pstate(b.frequency_hz)
                    .ok_or(Error::ForeignPState(b.frequency_hz))?;
                Ok(Band {
                    upper: b.upper_bound,
                    target,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PolicyTable::new(bands)
    }
}
