use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use tsgov::calibration::{default_grid, derive_table, emit_profile, load_profile, simulated_profile};
use tsgov::policy::{static_policy, MeasurementNoise};
use tsgov::sim::{summary_row, SUMMARY_HEADER};
use tsgov::trace::{emit_trace, generate_synthetic, load_trace, preset, Preset, WorkloadSpec};
use tsgov::{compare as compare_reports, run as simulate, Governor, GovernorConfig, PolicySpec, PolicyTable};
use tsgov::{Comparison, Processor, RunReport, Trace, TraceFormat};

use crate::{CalibrateArgs, CompareArgs, GenerateArgs, ModelArgs, RunArgs};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn trace_format(explicit: Option<&str>, path: &Path) -> Result<TraceFormat> {
    match explicit {
        Some(f) => Ok(f.parse()?),
        None => Ok(TraceFormat::from_path(path).unwrap_or(TraceFormat::Csv)),
    }
}

fn load_processor(path: Option<&Path>) -> Result<Processor> {
    match path {
        None => Ok(Processor::core2_quad()),
        Some(p) => Processor::from_toml(&read(p)?).with_context(|| format!("invalid processor config {}", p.display())),
    }
}

fn load_model(args: &ModelArgs) -> Result<(Processor, PolicyTable)> {
    let proc = load_processor(args.processor.as_deref())?;
    let table = match &args.table {
        None => PolicyTable::reference(&proc).context("default table does not fit the processor")?,
        Some(p) => {
            PolicyTable::from_toml(&read(p)?, &proc).with_context(|| format!("invalid policy table {}", p.display()))?
        }
    };
    Ok((proc, table))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let spec = match (&args.preset, &args.phases) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => {
            WorkloadSpec::from_toml(&read(path)?).with_context(|| format!("invalid phase spec {}", path.display()))?
        }
        (None, None) => bail!("either --preset or --phases is required"),
    };
    let trace = generate_synthetic(&spec, args.seed)?;
    let format = trace_format(args.format.as_deref(), &args.out)?;
    let mut buf = Vec::new();
    emit_trace(&trace, format, &mut buf)?;
    write(&args.out, &buf)?;
    println!("wrote {} slices to {}", trace.len(), args.out.display());
    Ok(())
}

fn load_trace_file(path: &Path, format: Option<&str>) -> Result<Trace> {
    let format = trace_format(format, path)?;
    let text = read(path)?;
    load_trace(text.as_bytes(), format).with_context(|| format!("invalid trace {}", path.display()))
}

pub fn run(args: RunArgs) -> Result<()> {
    let (proc, table) = load_model(&args.model)?;
    let trace = load_trace_file(&args.trace, args.format.as_deref())?;
    let policy: PolicySpec = args.policy.parse()?;
    let noise = (args.noise != 0.0).then_some(MeasurementNoise {
        amplitude: args.noise,
        seed: args.seed,
    });
    let governor = Governor::new(
        table,
        GovernorConfig {
            window: args.window,
            decision_interval: args.decision_interval,
            noise,
        },
    )?;
    let schedule = policy.schedule(&trace, &proc, &governor)?;
    let report = simulate(&trace, &schedule, &proc)?.with_policy(policy.to_string());
    write(&args.out, report.to_json()?.as_bytes())?;
    println!(
        "{}: {} slices, time {:.6} s, energy {:.3} J, {} transitions",
        policy,
        trace.len(),
        report.total_time,
        report.total_energy,
        report.transitions
    );
    Ok(())
}

fn load_report(path: &Path) -> Result<RunReport> {
    RunReport::from_json(&read(path)?).with_context(|| format!("invalid report {}", path.display()))
}

pub fn compare(args: CompareArgs) -> Result<()> {
    if args.suite {
        return suite(&args);
    }
    let (Some(policy_path), Some(reference_path)) = (&args.policy_report, &args.reference_report) else {
        bail!("two report paths are required without --suite");
    };
    let policy = load_report(policy_path)?;
    let reference = load_report(reference_path)?;
    let cmp = compare_reports(&policy, &reference)?;
    println!(
        "perf_loss / energy_savings: {} / {}",
        pct(cmp.perf_loss),
        pct(cmp.energy_savings)
    );
    if let Some(out) = &args.out {
        let text = format!("{SUMMARY_HEADER}\n{}\n", summary_row(&args.trace_id, &policy, &cmp));
        write(out, text.as_bytes())?;
    }
    Ok(())
}

fn suite_row(preset: Preset, seed: u64, proc: &Processor, governor: &Governor) -> Result<(RunReport, Comparison)> {
    let trace = generate_synthetic(&preset.workload(), seed)?;
    let reference = simulate(&trace, &static_policy(&trace, proc, &proc.f_max())?, proc)?;
    let report = simulate(&trace, &governor.schedule(&trace, proc)?, proc)?.with_policy("governor");
    let cmp = compare_reports(&report, &reference)?;
    Ok((report, cmp))
}

fn suite(args: &CompareArgs) -> Result<()> {
    let (proc, table) = load_model(&args.model)?;
    let governor = Governor::new(table, GovernorConfig::default())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("cannot start worker pool")?;
    let rows = pool.install(|| {
        Preset::ALL
            .par_iter()
            .map(|&p| suite_row(p, args.seed, &proc, &governor).map(|r| (p, r)))
            .collect::<Result<Vec<_>>>()
    })?;

    println!("{:<6} {:>10} {:>15}", "bench", "perf_loss", "energy_savings");
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for (p, (report, cmp)) in &rows {
        println!(
            "{:<6} {:>10} {:>15}",
            p.name(),
            pct(cmp.perf_loss),
            pct(cmp.energy_savings)
        );
        csv.push_str(&summary_row(p.name(), report, cmp));
        csv.push('\n');
    }
    let n = rows.len() as f64;
    let mean_loss = rows.iter().map(|(_, (_, c))| c.perf_loss).sum::<f64>() / n;
    let mean_savings = rows.iter().map(|(_, (_, c))| c.energy_savings).sum::<f64>() / n;
    println!("{:<6} {:>10} {:>15}", "mean", pct(mean_loss), pct(mean_savings));
    if let Some(out) = &args.out {
        write(out, csv.as_bytes())?;
    }
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let proc = load_processor(args.processor.as_deref())?;
    let points = if args.simulate {
        simulated_profile(&proc, args.seed)?
    } else {
        let path = args
            .profile
            .as_deref()
            .context("either --profile or --simulate is required")?;
        load_profile(read(path)?.as_bytes()).with_context(|| format!("invalid profile {}", path.display()))?
    };
    if points.is_empty() {
        bail!("profile contains no points");
    }
    if let Some(path) = &args.profile_out {
        let mut buf = Vec::new();
        emit_profile(&points, &mut buf)?;
        write(path, &buf)?;
    }
    let derived = derive_table(&points, &proc, args.max_loss, &default_grid())?;
    for w in &derived.warnings {
        eprintln!("warning: {w}");
    }
    write(&args.out, derived.table.to_toml()?.as_bytes())?;
    println!("{} profile points, max_loss {}", points.len(), pct(args.max_loss));
    let mut lower = 0.0;
    for b in derived.table.bands() {
        println!("  ({lower}, {}] -> {}", b.upper, b.target.frequency());
        lower = b.upper;
    }
    Ok(())
}
