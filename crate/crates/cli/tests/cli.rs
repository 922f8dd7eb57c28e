use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tsgov::trace::{load_trace, TraceFormat};
use tsgov::{Frequency, RunReport};

fn tsgov(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsgov"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tsgov(dir, args);
    assert!(
        out.status.success(),
        "tsgov {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = tsgov(dir, args);
    assert!(!out.status.success(), "tsgov {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn report(dir: &Path, name: &str) -> RunReport {
    RunReport::from_json(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(dir.path(), &["generate", "--preset", "bt", "--out", "bt.csv"]);
    assert!(err.contains("bt"), "{err}");
    assert!(!dir.path().join("bt.csv").exists());
}

#[test]
fn static_fmax_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "ft", "--out", "ft.csv"]);
    ok(
        d,
        &["run", "--trace", "ft.csv", "--policy", "static:fmax", "--out", "a.json"],
    );
    ok(
        d,
        &[
            "run",
            "--trace",
            "ft.csv",
            "--policy",
            "static:2.4GHz",
            "--out",
            "b.json",
        ],
    );
    let out = ok(d, &["compare", "a.json", "b.json"]);
    assert_eq!(out.trim(), "perf_loss / energy_savings: 0.00% / 0.00%");
}

#[test]
fn comparing_runs_of_different_traces_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "sp", "--seed", "1", "--out", "a.csv"]);
    ok(d, &["generate", "--preset", "sp", "--seed", "2", "--out", "b.csv"]);
    ok(d, &["run", "--trace", "a.csv", "--out", "a.json"]);
    ok(
        d,
        &["run", "--trace", "b.csv", "--policy", "static:fmax", "--out", "b.json"],
    );
    let err = fails(d, &["compare", "a.json", "b.json"]);
    assert!(err.contains("not comparable"), "{err}");
}

#[test]
fn governor_on_cg_uses_the_two_middle_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "cg", "--seed", "3", "--out", "cg.json"]);
    ok(d, &["run", "--trace", "cg.json", "--out", "gov.json"]);
    let r = report(d, "gov.json");
    assert_eq!(r.policy, "governor");
    assert_eq!(r.per_slice[0].frequency_hz, Frequency::from_mhz(2400));
    assert!(r.per_slice[1..]
        .iter()
        .all(|s| [2200, 1600].map(Frequency::from_mhz).contains(&s.frequency_hz)));
}

#[test]
fn oracle_never_costs_more_energy_than_governor() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "mg", "--out", "mg.csv"]);
    ok(
        d,
        &["run", "--trace", "mg.csv", "--policy", "oracle", "--out", "o.json"],
    );
    ok(d, &["run", "--trace", "mg.csv", "--out", "g.json"]);
    assert!(report(d, "o.json").total_energy <= report(d, "g.json").total_energy);
}

#[test]
fn generated_traces_reload_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "cg", "--seed", "9", "--out", "t.csv"]);
    ok(d, &["generate", "--preset", "cg", "--seed", "9", "--out", "t.json"]);
    let csv = load_trace(fs::read(d.join("t.csv")).unwrap().as_slice(), TraceFormat::Csv).unwrap();
    let json = load_trace(fs::read(d.join("t.json")).unwrap().as_slice(), TraceFormat::Json).unwrap();
    assert_eq!(csv, json);
}

#[test]
fn malformed_trace_names_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("bad.csv"),
        "slice_index,instructions,memory_accesses,t_on_seconds,t_off_seconds\n\
         0,1000000,2000,0.05,0.05\n\
         1,1000000,lots,0.05,0.05\n",
    )
    .unwrap();
    let err = fails(d, &["run", "--trace", "bad.csv", "--out", "r.json"]);
    assert!(err.contains("line 3") && err.contains("memory_accesses"), "{err}");
    assert!(!d.join("r.json").exists());
}

#[test]
fn calibrate_needs_an_input() {
    let dir = tempfile::tempdir().unwrap();
    fails(dir.path(), &["calibrate", "--out", "t.toml"]);
    let err = fails(
        dir.path(),
        &["calibrate", "--profile", "missing.csv", "--out", "t.toml"],
    );
    assert!(err.contains("missing.csv"), "{err}");
}

#[test]
fn zero_loss_budget_only_slows_pure_stall_bands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["calibrate", "--simulate", "--max-loss", "0", "--out", "strict.toml"],
    );
    let text = fs::read_to_string(d.join("strict.toml")).unwrap();
    let table = tsgov::PolicyTable::from_toml(&text, &tsgov::Processor::core2_quad()).unwrap();
    let bands = table.bands();
    // The generator makes slices above MAPI 0.08 entirely off-chip, so only
    // those may leave f_max without any slowdown.
    assert_eq!(bands[0].target.frequency(), Frequency::from_mhz(2400), "{text}");
    assert!(bands[0].upper >= 0.08 - 1e-9, "{text}");
    assert_eq!(bands.len(), 2, "{text}");
}

#[test]
fn calibrated_table_can_drive_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["calibrate", "--simulate", "--profile-out", "p.csv", "--out", "sim.toml"],
    );
    ok(d, &["calibrate", "--profile", "p.csv", "--out", "again.toml"]);
    assert_eq!(
        fs::read(d.join("sim.toml")).unwrap(),
        fs::read(d.join("again.toml")).unwrap()
    );
    ok(d, &["generate", "--preset", "sp", "--out", "sp.csv"]);
    ok(
        d,
        &["run", "--trace", "sp.csv", "--table", "sim.toml", "--out", "a.json"],
    );
    ok(d, &["run", "--trace", "sp.csv", "--out", "b.json"]);
    assert_eq!(report(d, "a.json"), report(d, "b.json"));
}

#[test]
fn suite_writes_one_row_per_preset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["compare", "--suite", "--jobs", "2", "--out", "suite.csv"]);
    assert!(out.lines().any(|l| l.starts_with("mean")), "{out}");
    let csv = fs::read_to_string(d.join("suite.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for (row, name) in rows.iter().zip(["cg", "ft", "mg", "sp"]) {
        assert!(row.starts_with(&format!("{name},governor,")), "{row}");
    }
}

#[test]
fn suite_output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let one = ok(
        d,
        &["compare", "--suite", "--seed", "4", "--jobs", "1", "--out", "one.csv"],
    );
    let four = ok(
        d,
        &["compare", "--suite", "--seed", "4", "--jobs", "4", "--out", "four.csv"],
    );
    assert_eq!(one, four);
    assert_eq!(
        fs::read(d.join("one.csv")).unwrap(),
        fs::read(d.join("four.csv")).unwrap()
    );
}

#[test]
fn bad_policy_string_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--preset", "ft", "--out", "ft.csv"]);
    fails(
        d,
        &["run", "--trace", "ft.csv", "--policy", "static:3GHz", "--out", "r.json"],
    );
    fails(d, &["run", "--trace", "ft.csv", "--policy", "turbo", "--out", "r.json"]);
}
