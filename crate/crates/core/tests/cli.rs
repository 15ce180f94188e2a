use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relpos::cli::{parse_scenario, run_at, CliError, Report};
use relpos::Point;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn relpos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relpos")).args(args).output().expect("binary runs")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_report(out: &Output) -> Report {
    Report::from_json(&String::from_utf8_lossy(&out.stdout)).expect("stdout is a report")
}

#[test]
fn shipped_trilat_file_parses_emitters() {
    let f = parse_scenario(&example("trilat3d_mirror.json")).unwrap();
    assert_eq!(
        f.scenario.emitters,
        vec![Point::xyz(0.0, 0.0, 0.0), Point::xyz(500.0, 0.0, 0.0), Point::xyz(0.0, 500.0, 0.0)]
    );
}

#[test]
fn run_trilat_file_reports_the_analytic_point() {
    let out = relpos(&["run", example("trilat3d_mirror.json").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_report(&out);
    let res = report.solves[0].result.as_ref().unwrap();
    assert!((res.estimate - Point::xyz(180.0, 90.0, 49500f64.sqrt())).norm() < 1e-9);
    assert!(res.residual_norm < 1e-6);
    assert!(out.stderr.is_empty());
}

#[test]
fn every_shipped_example_runs_cleanly() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = relpos(&["run", path.to_str().unwrap(), "--quiet"]);
            assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        }
    }
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir, "empty.json", "");
    let out = relpos(&["run", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error at line"));

    let text = std::fs::read_to_string(example("trilat3d_mirror.json"))
        .unwrap()
        .replace("\"distances\"", "\"noise_sigma_t\": -1, \"distances\"");
    let negative = write(&dir, "negative.json", &text);
    let out = relpos(&["validate", negative.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise_sigma_t"));

    assert_eq!(relpos(&["run", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(relpos(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(relpos(&["run", example("trilat3d_mirror.json").to_str().unwrap(), "--mode", "tdoa9d"]).status.code(), Some(2));
}

#[test]
fn solve_errors_exit_with_1_and_are_embedded() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(example("trilat3d_mirror.json")).unwrap().replace("[300, 400, 500]", "[10, 10, 10]");
    let path = write(&dir, "apart.json", &text);
    let out = relpos(&["run", path.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_report(&out);
    assert!(report.solves[0].error.as_deref().unwrap().contains("inconsistent"));
    assert!(report.has_errors());
}

#[test]
fn validate_reports_ok() {
    let out = relpos(&["validate", example("pipeline_team.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: mode pipeline"));
}

#[test]
fn identical_runs_differ_only_in_timestamp() {
    let path = example("tdoa_monte_carlo.json");
    let a = relpos(&["run", path.to_str().unwrap(), "--quiet"]);
    let b = relpos(&["run", path.to_str().unwrap(), "--quiet"]);
    let (mut ra, mut rb) = (stdout_report(&a), stdout_report(&b));
    ra.provenance.generated_at = 0;
    rb.provenance.generated_at = 0;
    assert_eq!(ra.to_json(), rb.to_json());

    let file = parse_scenario(&path).unwrap();
    assert_eq!(run_at(&file, 7).to_json(), run_at(&file, 7).to_json());
}

#[test]
fn report_round_trip_is_a_fixed_point() {
    for name in ["trilat3d_mirror.json", "pipeline_team.json", "tdoa_monte_carlo.json", "doppler_table.json", "tdoa3d_ground.json"] {
        let report = run_at(&parse_scenario(&example(name)).unwrap(), 1);
        let text = report.to_json();
        let back = Report::from_json(&text).unwrap();
        assert_eq!(back, report, "{name}");
        assert_eq!(back.to_json(), text, "{name}");
    }
}

#[test]
fn seed_and_mode_overrides_apply() {
    let path = example("tdoa2d_triangle.json");
    let out = relpos(&["run", path.to_str().unwrap(), "--seed", "99", "--quiet"]);
    let report = stdout_report(&out);
    assert_eq!(report.provenance.seed, 99);
    assert_eq!(report.input.scenario.seed, 99);

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(example("tdoa3d_ground.json")).unwrap().replace("\"tdoa3d\"", "\"trilat3d\"");
    let path = write(&dir, "modes.json", &text);
    let out = relpos(&["run", path.to_str().unwrap(), "--mode", "tdoa3d", "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_report(&out);
    assert_eq!(report.mode, relpos::cli::Mode::Tdoa3d);
    assert!(report.solves[0].error_m.unwrap() < 1e-4);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = relpos(&["run", example("doppler_table.json").to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("doppler: 3 solve(s), 0 failed"));
    let report = Report::from_json(&std::fs::read_to_string(target).unwrap()).unwrap();
    let ranges: Vec<f64> = report.solves.iter().map(|s| s.doppler.as_ref().unwrap().range.meters).collect();
    assert_eq!(ranges, vec![0.0, 15.0, 30.0]);
}

#[test]
fn csv_has_one_row_per_trial() {
    let out = relpos(&["export-csv", example("tdoa_monte_carlo.json").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, ["trial", "sigma_t", "mode", "x", "y", "z", "residual_norm", "converged"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 600);
    assert_eq!(&rows[0][2], "tdoa2d");
    assert_eq!(&rows[0][5], "");
    assert_eq!(&rows[599][0], "199");
    assert_eq!(rows[599][1].parse::<f64>().unwrap(), 1e-7);
}

#[test]
fn csv_without_monte_carlo_lists_each_solve() {
    let out = relpos(&["export-csv", example("pipeline_team.json").to_str().unwrap(), "--quiet"]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[0] == "0" && &r[7] == "true" && !r[5].is_empty()));
}

#[test]
fn parse_error_carries_line() {
    match relpos::cli::parse_scenario_str("{\n\"schema_version\": 1,\n\"scenario\": [}") {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
}
