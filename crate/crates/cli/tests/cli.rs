use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binary_povm_cli::{parse_scenario, run, RunReport, Status};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn binpovm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binpovm"))
        .args(args)
        .output()
        .expect("spawn binpovm")
}

fn report_of(output: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&output.stdout).unwrap()).unwrap()
}

fn prob(report: &RunReport, label: &str) -> f64 {
    report
        .probabilities
        .iter()
        .find(|p| p.label == label)
        .unwrap_or_else(|| panic!("no probability {label}"))
        .value
}

fn without_timing(mut r: RunReport) -> RunReport {
    r.elapsed_ms = 0.0;
    r
}

#[test]
fn single_z_on_up() {
    let out = binpovm(&[scenario("single_z_up.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert_eq!(r.status, Status::Ok);
    assert!((prob(&r, "p0") - 1.0).abs() <= 1e-12);
    assert!((r.reconstructed - 1.0).abs() <= 1e-12);
    assert!((r.oracle - 1.0).abs() <= 1e-12);
}

#[test]
fn bipartite_singlet() {
    let out = binpovm(&[scenario("bipartite_singlet.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert!((r.reconstructed + 1.0).abs() <= 1e-12);
    assert!((prob(&r, "A") - 0.5).abs() <= 1e-12);
    assert!((prob(&r, "B") - 0.5).abs() <= 1e-12);
    assert!(prob(&r, "AB").abs() <= 1e-12);
}

#[test]
fn compare_counts_parameters() {
    let out = binpovm(&[scenario("compare_five_levels.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let c = report_of(&out).comparison.expect("comparison");
    assert_eq!(c.shots, 100_000);
    assert_eq!(
        (
            c.binary.parameters_estimated,
            c.von_neumann.parameters_estimated
        ),
        (1, 4)
    );
}

#[test]
fn chsh_reaches_tsirelson_value() {
    let out = binpovm(&[scenario("chsh_singlet.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert!((r.reconstructed - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-9);
    let terms = r.bell_terms.expect("bell terms");
    let from_terms: f64 = terms.iter().map(|t| t.evaluate(t.p0, t.q0, t.p00)).sum();
    assert!((from_terms - r.reconstructed).abs() <= 1e-12);
}

#[test]
fn every_bundled_scenario_succeeds_and_round_trips() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = binpovm(&[path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", path.display());
        let r = report_of(&out);
        assert_eq!(r.status, Status::Ok);
        assert!(r.abs_error <= 1e-9);
        let again = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(again, r);
        if let Some(s) = &r.sampled {
            assert!(
                (s.value - r.oracle).abs() <= 5.0 * s.std_error + 1e-12,
                "{}: sampled {} vs oracle {}",
                path.display(),
                s.value,
                r.oracle
            );
        }
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn same_seed_gives_identical_report() {
    let path = scenario("witness_singlet.json");
    let a = report_of(&binpovm(&[path.to_str().unwrap()]));
    let b = report_of(&binpovm(&[path.to_str().unwrap()]));
    assert!(a.sampled.is_some());
    assert_eq!(without_timing(a), without_timing(b));
}

#[test]
fn seed_and_shot_overrides_apply() {
    let path = scenario("parity_thermal.json");
    let out = binpovm(&[path.to_str().unwrap(), "--shots", "500", "--seed", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let s = report_of(&out).sampled.unwrap();
    assert_eq!((s.shots, s.seed), (500, 99));

    let other = report_of(&binpovm(&[
        path.to_str().unwrap(),
        "--shots",
        "500",
        "--seed",
        "100",
    ]));
    assert_ne!(other.sampled.unwrap().value, s.value);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.csv");
    let out = binpovm(&[
        scenario("single_z_up.json").to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("schema_version,name,kind,mode,status,oracle,reconstructed"));
    assert!(lines[1].contains(",OK,"));
}

#[test]
fn dimension_mismatch_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "name": "bad", "kind": "single",
            "observables": [{"diagonal": [1, 2, 3]}],
            "state": {"preset": "maximally_mixed", "dim": 2}}"#,
    )
    .unwrap();
    let out = binpovm(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));
}

#[test]
fn malformed_json_and_missing_file_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"schema_version\": 1,\n \"name\": }").unwrap();
    let out = binpovm(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = binpovm(&[dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_bounds_are_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tight.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "name": "too tight", "kind": "single",
            "observables": [{"preset": "pauli_z"}],
            "state": {"preset": "maximally_mixed", "dim": 2},
            "bounds": [{"a_min": -0.5, "a_max": 1}]}"#,
    )
    .unwrap();
    assert_eq!(binpovm(&[path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn library_entry_points_match_binary() {
    let s = parse_scenario(&scenario("ghz_xxx.json")).unwrap();
    let r = run(&s).unwrap();
    let from_bin = report_of(&binpovm(&[scenario("ghz_xxx.json").to_str().unwrap()]));
    assert_eq!(without_timing(r), without_timing(from_bin));
}
