//! CSV and JSON trace encodings.
//!
//! CSV layout:
//!
//! ```text
//! # timeslice_nominal_seconds=0.1
//! slice_index,instructions,memory_accesses,t_on_seconds,t_off_seconds
//! 0,100000000,2000000,0.006000000000000005,0.094
//! ```
//!
//! The leading directive line is optional on input (defaults to
//! [`DEFAULT_TIMESLICE`]) and always written on output. Floats are written
//! in shortest round-trip form.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SliceSample, Trace, DEFAULT_TIMESLICE};
use crate::error::{Error, Result};
use crate::model::SliceTiming;

pub const CSV_HEADER: [&str; 5] = [
    "slice_index",
    "instructions",
    "memory_accesses",
    "t_on_seconds",
    "t_off_seconds",
];

const TIMESLICE_DIRECTIVE: &str = "timeslice_nominal_seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(TraceFormat::Csv),
            "json" => Some(TraceFormat::Json),
            _ => None,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TraceFormat::Csv),
            "json" => Ok(TraceFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown trace format `{other}` (expected csv or json)"
            ))),
        }
    }
}

pub fn load_trace<R: Read>(mut source: R, format: TraceFormat) -> Result<Trace> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    match format {
        TraceFormat::Csv => parse_csv(&text),
        TraceFormat::Json => parse_json(&text),
    }
}

pub fn emit_trace<W: Write>(trace: &Trace, format: TraceFormat, mut sink: W) -> Result<()> {
    let text = match format {
        TraceFormat::Csv => to_csv(trace),
        TraceFormat::Json => to_json(trace)?,
    };
    sink.write_all(text.as_bytes())?;
    Ok(())
}

fn to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 2));
    let _ = writeln!(out, "# {TIMESLICE_DIRECTIVE}={}", trace.timeslice_nominal());
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    for (i, s) in trace.slices().iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i,
            s.instructions(),
            s.memory_accesses(),
            s.timing().t_on(),
            s.timing().t_off()
        );
    }
    out
}

fn parse_err(line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_csv(text: &str) -> Result<Trace> {
    let mut timeslice = DEFAULT_TIMESLICE;
    let mut skipped = 0u64;
    let mut body_start = 0usize;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !(trimmed.starts_with('#') || trimmed.is_empty()) {
            break;
        }
        skipped += 1;
        body_start += line.len();
        if let Some((key, value)) = trimmed.trim_start_matches('#').trim().split_once('=') {
            if key.trim() == TIMESLICE_DIRECTIVE {
                timeslice = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(skipped, TIMESLICE_DIRECTIVE, format!("bad number: {e}")))?;
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);

    let header = reader
        .headers()
        .map_err(|e| parse_err(skipped + 1, "header", e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(parse_err(
            skipped + 1,
            "header",
            format!(
                "expected `{}`, got `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut slices = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0) + skipped;
            parse_err(line, "record", e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0) + skipped;
        let field = |col: usize| -> &str { record.get(col).unwrap_or_default() };

        let slice_index: i128 = parse_field(field(0), line, CSV_HEADER[0])?;
        let instructions: i128 = parse_field(field(1), line, CSV_HEADER[1])?;
        let accesses: i128 = parse_field(field(2), line, CSV_HEADER[2])?;
        let t_on: f64 = parse_field(field(3), line, CSV_HEADER[3])?;
        let t_off: f64 = parse_field(field(4), line, CSV_HEADER[4])?;

        slices.push(build_slice(index, slice_index, instructions, accesses, t_on, t_off)?);
    }

    Trace::new(slices, timeslice).map_err(|e| match e {
        Error::InvalidArgument(msg) => parse_err(skipped + 1, "trace", msg),
        other => other,
    })
}

fn parse_field<T: FromStr>(raw: &str, line: u64, column: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| parse_err(line, column, format!("cannot parse `{raw}`: {e}")))
}

fn build_slice(
    index: usize,
    slice_index: i128,
    instructions: i128,
    accesses: i128,
    t_on: f64,
    t_off: f64,
) -> Result<SliceSample> {
    let invalid = |message: String| Error::Validation { index, message };
    if slice_index != index as i128 {
        return Err(invalid(format!("slice_index {slice_index} out of sequence")));
    }
    let instructions = u64::try_from(instructions)
        .map_err(|_| invalid(format!("instructions must be a non-negative count, got {instructions}")))?;
    let accesses = u64::try_from(accesses)
        .map_err(|_| invalid(format!("memory_accesses must be a non-negative count, got {accesses}")))?;
    let timing = SliceTiming::new(t_on, t_off).map_err(|e| invalid(e.to_string()))?;
    SliceSample::new(instructions, accesses, timing).map_err(|e| invalid(e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    timeslice_nominal: f64,
    slices: Vec<SliceDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SliceDoc {
    slice_index: i128,
    instructions: i128,
    memory_accesses: i128,
    t_on_seconds: f64,
    t_off_seconds: f64,
}

fn to_json(trace: &Trace) -> Result<String> {
    let doc = TraceDoc {
        timeslice_nominal: trace.timeslice_nominal(),
        slices: trace
            .slices()
            .iter()
            .enumerate()
            .map(|(i, s)| SliceDoc {
                slice_index: i as i128,
                instructions: s.instructions() as i128,
                memory_accesses: s.memory_accesses() as i128,
                t_on_seconds: s.timing().t_on(),
                t_off_seconds: s.timing().t_off(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

fn parse_json(text: &str) -> Result<Trace> {
    let doc: TraceDoc = serde_json::from_str(text)
        .map_err(|e| parse_err(e.line() as u64, &format!("{}", e.column()), e.to_string()))?;
    let slices = doc
        .slices
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            build_slice(
                i,
                s.slice_index,
                s.instructions,
                s.memory_accesses,
                s.t_on_seconds,
                s.t_off_seconds,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Trace::new(slices, doc.timeslice_nominal)
}
