//! End-to-end tests of the obspec binary: scenario validation, sweep CSVs,
//! exit codes, and the moment-table cache roundtrip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn obspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn write_scn(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_SCN: &str =
    "D = 2\nM = 8\nsampler_ratio = 1\nomega_bar = 0.25, 0.75\nbandwidth_bar = 0.125, 0.125\n";

#[test]
fn check_reports_sizes_of_shipped_scenario() {
    let scn = workspace_file("scenarios/narrow2.scn");
    let out = obspec(&["check", "--scenario", scn.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("D = 2"), "{text}");
    assert!(text.contains("M = 64"), "{text}");
    assert!(text.contains("pair statistics C = 2016"), "{text}");
    assert!(text.contains("quadrivariate moments = 635376"), "{text}");
}

#[test]
fn check_rejects_oversampling_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(
        dir.path(),
        "bad.scn",
        "D = 1\nM = 8\nsampler_ratio = 2\nomega_bar = 0.5\nbandwidth_bar = 0.1\n",
    );
    let out = obspec(&["check", "--scenario", scn.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("oversampling"), "{}", stderr(&out));
}

#[test]
fn check_names_missing_field_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(
        dir.path(),
        "missing.scn",
        "D = 1\nM = 8\nsampler_ratio = 1\nomega_bar = 0.5\n",
    );
    let out = obspec(&["check", "--scenario", scn.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bandwidth_bar"), "{}", stderr(&out));
}

#[test]
fn loss_sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let out_csv = dir.path().join("loss.csv");
    let args = [
        "loss",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "-6:6:3",
        "--out",
        out_csv.to_str().unwrap(),
    ];
    let out = obspec(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let first = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "theta2_db,chi_1_db,chi_2_db");
    assert_eq!(lines.len(), 6, "header plus five grid rows: {first}");
    assert!(lines[1].starts_with("-6.00000000,"), "{}", lines[1]);

    // loss in dB is never positive
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(cols[1] <= 0.0 && cols[2] <= 0.0, "{line}");
    }

    // re-run overwrites atomically with identical bytes
    let out = obspec(&args);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read_to_string(&out_csv).unwrap());
}

#[test]
fn loss_accepts_degenerate_single_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let out_csv = dir.path().join("one.csv");
    let out = obspec(&[
        "loss",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "3:3:2.5",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(body.lines().count(), 2);
    assert!(body.lines().nth(1).unwrap().starts_with("3.00000000,"));
}

#[test]
fn loss_rejects_bad_sweep_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let out = obspec(&[
        "loss",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "6:-6:3",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.csv").exists(), "no partial file");
}

#[test]
fn uncertainty_analytic_only_when_k_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let out_csv = dir.path().join("unc.csv");
    let out = obspec(&[
        "uncertainty",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "-3:3:3",
        "--n",
        "1000",
        "--k",
        "0",
        "--mode",
        "crb,mc-quant,mc-ideal",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    let header = body.lines().next().unwrap();
    assert_eq!(
        header,
        "theta2_db,sigma_crb_ideal_1,sigma_crb_ideal_2,sigma_crb_quant_1,sigma_crb_quant_2"
    );
    assert_eq!(body.lines().count(), 4);

    // quantized uncertainty never beats ideal
    for line in body.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(c[3] >= c[1] && c[4] >= c[2], "{line}");
    }
}

#[test]
fn uncertainty_with_trials_adds_mc_columns() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let out_csv = dir.path().join("unc_mc.csv");
    let args = [
        "uncertainty",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-6",
        "--sweep",
        "0:3:3",
        "--n",
        "400",
        "--k",
        "8",
        "--iters",
        "4",
        "--seed",
        "11",
        "--mode",
        "crb,mc-quant,mc-ideal",
        "--out",
        out_csv.to_str().unwrap(),
    ];
    let out = obspec(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    let header = body.lines().next().unwrap();
    assert_eq!(
        header,
        "theta2_db,sigma_crb_ideal_1,sigma_crb_ideal_2,sigma_crb_quant_1,sigma_crb_quant_2,sigma_mc_quant_1,sigma_mc_quant_2,sigma_mc_ideal_1,sigma_mc_ideal_2"
    );
    assert_eq!(body.lines().count(), 3);
    for line in body.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(c.len(), 9);
        assert!(c[5..].iter().all(|&v| v > 0.0), "{line}");
    }

    // deterministic across repeat runs and thread counts
    let rerun = obspec(&args);
    assert!(rerun.status.success());
    assert_eq!(body, std::fs::read_to_string(&out_csv).unwrap());
    let mut threaded: Vec<&str> = args.to_vec();
    threaded.extend(["--threads", "4"]);
    let out = obspec(&threaded);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(body, std::fs::read_to_string(&out_csv).unwrap());
}

#[test]
fn desk_preset_overrides_window_length() {
    let dir = tempfile::tempdir().unwrap();
    // M = 64 in the file; the desk preset shortens windows to M = 16
    let scn = write_scn(
        dir.path(),
        "full.scn",
        "D = 2\nM = 64\nsampler_ratio = 1\nomega_bar = 0.25, 0.75\nbandwidth_bar = 0.125, 0.125\n",
    );
    let out_csv = dir.path().join("desk.csv");
    let out = obspec(&[
        "loss",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "0:0:1",
        "--preset",
        "desk",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    // the same grid point at an explicit M = 16 gives identical output
    let scn16 = write_scn(
        dir.path(),
        "desk16.scn",
        "D = 2\nM = 16\nsampler_ratio = 1\nomega_bar = 0.25, 0.75\nbandwidth_bar = 0.125, 0.125\n",
    );
    let out_csv16 = dir.path().join("desk16.csv");
    let out = obspec(&[
        "loss",
        "--scenario",
        scn16.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "0:0:1",
        "--out",
        out_csv16.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(&out_csv).unwrap(),
        std::fs::read_to_string(&out_csv16).unwrap()
    );

    let out = obspec(&[
        "loss",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta1-db",
        "-12",
        "--sweep",
        "0:0:1",
        "--preset",
        "lab",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn moment_table_dump_and_load_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scn(dir.path(), "small.scn", SMALL_SCN);
    let table = dir.path().join("moments.bin");
    let out = obspec(&[
        "moment-table",
        "dump",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta-db",
        "-12,-6",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("wrote 70 quadrivariate moments"));

    let out = obspec(&[
        "moment-table",
        "load",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta-db",
        "-12,-6",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("fingerprints match"),
        "{}",
        stdout(&out)
    );

    // a different theta must be rejected as a validation problem
    let out = obspec(&[
        "moment-table",
        "load",
        "--scenario",
        scn.to_str().unwrap(),
        "--theta-db",
        "-12,-5",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn help_lists_subcommands() {
    let out = obspec(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in ["loss", "uncertainty", "check", "moment-table"] {
        assert!(text.contains(sub), "missing {sub} in help");
    }
}
