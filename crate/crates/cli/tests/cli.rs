use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rbc_cli::export::{run_export, ExportFlags, Manifest};
use rbc_cli::{load_problem, plot, verify, CliError, Report};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn rbc() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rbc"));
    for var in [
        "RBC_THREADS",
        "RBC_SEED",
        "RBC_TOL_FEAS",
        "RBC_TOL_MARGIN",
        "RBC_MAX_REGIONS",
        "RBC_SOLVER_CMD",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn run_verify(problem: &str, extra: &[&str], envs: &[(&str, &str)]) -> (i32, String, Value) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let mut cmd = rbc();
    cmd.arg("verify")
        .arg("--problem")
        .arg(fixture(problem))
        .arg("--out")
        .arg(&out)
        .args(extra);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let output = cmd.output().unwrap();
    let stdout = String::from_utf8(output.stdout).unwrap();
    let report = fs::read_to_string(&out)
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (output.status.code().unwrap(), stdout, report)
}

fn schema() -> jsonschema::JSONSchema {
    let text = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json"),
    )
    .unwrap();
    jsonschema::JSONSchema::compile(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(schema: &jsonschema::JSONSchema, report: &Value) {
    if let Err(errors) = schema.validate(report) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect();
        panic!("report does not match the schema: {msgs:?}");
    }
}

fn quiet_flags() -> ExportFlags {
    ExportFlags {
        monolithic: false,
        set_conditions: false,
        assert_domain: false,
        solver_cmd: None,
        solver_timeout: std::time::Duration::from_secs(10),
    }
}

#[test]
fn contracting_diamond_exits_zero_with_four_verified_regions() {
    let (code, stdout, report) = run_verify("diamond_contract.problem.json", &[], &[]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("invariance:        verified"));
    assert_eq!(report["regions"].as_array().unwrap().len(), 4);
    assert_eq!(report["verdicts"]["invariance"], "verified");
    for row in report["regions"].as_array().unwrap() {
        let bound = row["invariance"]["bound"].as_f64().unwrap();
        assert!((bound - 1.0).abs() < 1e-6);
    }
}

#[test]
fn drifting_diamond_exits_one_with_witness_coordinates() {
    let (code, _, report) = run_verify("diamond_drift.problem.json", &[], &[]);
    assert_eq!(code, 1);
    assert_eq!(report["verdicts"]["invariance"], "falsified");
    let witnesses = report["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty());
    for w in witnesses.iter().filter(|w| w["label"] == "invariance") {
        let p: Vec<f64> = w["point"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert!((p[0].abs() + p[1].abs() - 1.0).abs() < 1e-6, "{p:?}");
        assert!(w["value"].as_f64().unwrap() < 0.0);
    }
}

#[test]
fn constant_certificate_exits_three() {
    let (code, stdout, report) = run_verify("constant.problem.json", &[], &[]);
    assert_eq!(code, 3);
    assert!(stdout.contains("boundary-not-found"));
    assert_eq!(report["failure"]["kind"], "boundary-not-found");
}

#[test]
fn load_errors_exit_three_with_a_message() {
    for (name, needle) in [
        ("mismatch.problem.json", "dimension mismatch"),
        ("malformed.problem.json", "malformed.problem.json:4:"),
        ("missing_field.problem.json", "missing field `unsafe_set`"),
        ("no_such_file.problem.json", "no_such_file"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let output = rbc()
            .args(["verify", "--problem"])
            .arg(fixture(name))
            .arg("--out")
            .arg(dir.path().join("r.json"))
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(3), "{name}");
        let stderr = String::from_utf8(output.stderr).unwrap();
        assert!(stderr.contains(needle), "{name}: {stderr}");
        assert!(!dir.path().join("r.json").exists());
    }
}

#[test]
fn load_errors_have_structured_variants() {
    assert!(matches!(
        load_problem(&fixture("mismatch.problem.json")),
        Err(CliError::DimensionMismatch(_))
    ));
    match load_problem(&fixture("malformed.problem.json")) {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
    match load_problem(&fixture("missing_field.problem.json")) {
        Err(CliError::MissingField { field, .. }) => assert_eq!(field, "unsafe_set"),
        other => panic!("expected a missing field, got {other:?}"),
    }
}

#[test]
fn arch3_problem_loads_in_two_dimensions() {
    let p = load_problem(&fixture("arch3.problem.json")).unwrap();
    assert_eq!(p.dim(), 2);
    let f = p.dynamics.eval(&[1.0, 2.0]).unwrap();
    assert_eq!(f, vec![1.0 - 1.0 + 2.0 - 4.0, -1.0 + 2.0 - 2.0 - 8.0]);
    assert_eq!(p.config.domain, vec![(-3.0, 3.0); 2]);
    assert_eq!(p.config.seed, 0);
}

#[test]
fn every_report_matches_the_published_schema() {
    let schema = schema();
    for name in [
        "diamond_contract.problem.json",
        "diamond_drift.problem.json",
        "diamond_shifted_init.problem.json",
        "constant.problem.json",
    ] {
        let (_, _, report) = run_verify(name, &[], &[]);
        assert_valid(&schema, &report);
    }
}

#[test]
fn reports_are_identical_apart_from_timings() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    let (_, _, a) = run_verify(
        "diamond_shifted_init.problem.json",
        &["--threads", "1"],
        &[],
    );
    let (_, _, b) = run_verify(
        "diamond_shifted_init.problem.json",
        &["--threads", "3"],
        &[],
    );
    assert_eq!(strip(a), strip(b));

    let p = load_problem(&fixture("linear4d.problem.json")).unwrap();
    let x = serde_json::to_string(&verify(&p).unwrap().without_timings()).unwrap();
    let y = serde_json::to_string(&verify(&p).unwrap().without_timings()).unwrap();
    assert_eq!(x, y);
}

#[test]
fn flags_and_environment_override_the_problem_file() {
    let (_, _, report) = run_verify(
        "diamond_contract.problem.json",
        &["--tol-margin", "0.5", "--seed", "9"],
        &[],
    );
    assert_eq!(report["config"]["tol_margin"], 0.5);
    assert_eq!(report["config"]["seed"], 9);
    let (code, _, report) = run_verify(
        "diamond_contract.problem.json",
        &[],
        &[("RBC_MAX_REGIONS", "1")],
    );
    assert_eq!(report["enumeration"]["truncated"], true);
    assert_eq!(report["regions"].as_array().unwrap().len(), 1);
    assert!(code == 0 || code == 2);
}

#[test]
fn per_region_export_writes_four_files_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = load_problem(&fixture("diamond_contract.problem.json")).unwrap();
    let m = run_export(&p, dir.path(), &quiet_flags()).unwrap();
    assert_eq!(m.files.len(), 4);
    assert_eq!(m.bridge.status, "not-configured");
    for e in &m.files {
        let text = fs::read_to_string(dir.path().join(&e.file)).unwrap();
        assert!(text.contains("(check-sat)"));
        assert_eq!(e.internal.as_deref(), Some("unsat"));
    }
    let on_disk: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(on_disk, m);
    let smt_files = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "smt2")
        })
        .count();
    assert_eq!(smt_files, 4);
}

#[test]
fn drifting_export_marks_satisfiable_regions() {
    let dir = tempfile::tempdir().unwrap();
    let p = load_problem(&fixture("diamond_drift.problem.json")).unwrap();
    let m = run_export(&p, dir.path(), &quiet_flags()).unwrap();
    assert!(m.files.iter().any(|e| e.internal.as_deref() == Some("sat")));
}

#[test]
fn monolithic_export_is_one_file_with_four_disjuncts() {
    let dir = tempfile::tempdir().unwrap();
    let p = load_problem(&fixture("diamond_contract.problem.json")).unwrap();
    let flags = ExportFlags {
        monolithic: true,
        set_conditions: true,
        ..quiet_flags()
    };
    let m = run_export(&p, dir.path(), &flags).unwrap();
    assert_eq!(m.files.len(), 3);
    let text = fs::read_to_string(dir.path().join("invariance.smt2")).unwrap();
    assert_eq!(text.matches("(assert (or ").count(), 1);
    let or_at = text.find("(assert (or ").unwrap();
    assert_eq!(text[or_at..].matches("(and ").count(), 4);
    assert_eq!(m.files[0].regions.len(), 4);
}

#[test]
fn missing_solver_binary_degrades_to_export_only() {
    let dir = tempfile::tempdir().unwrap();
    let output = rbc()
        .args(["export-smt", "--problem"])
        .arg(fixture("diamond_contract.problem.json"))
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--solver-cmd", "definitely-not-a-solver-binary {file}"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let m: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m.bridge.status, "unavailable");
    assert_eq!(m.files.len(), 4);
}

#[cfg(unix)]
#[test]
fn configured_solver_answers_are_collated() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("fake-solver.sh");
    fs::write(&script, "#!/bin/sh\ntest -f \"$1\" && echo unsat\n").unwrap();
    fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
    let out = dir.path().join("out");
    let p = load_problem(&fixture("diamond_contract.problem.json")).unwrap();
    let flags = ExportFlags {
        solver_cmd: Some(format!("{} {{file}}", script.display())),
        ..quiet_flags()
    };
    let m = run_export(&p, &out, &flags).unwrap();
    assert_eq!(m.bridge.status, "ran");
    for e in &m.files {
        assert_eq!(e.solver.as_deref(), Some("unsat"));
        assert_eq!(e.solver, e.internal);
    }
}

fn plot_for(problem: &str) -> (Report, String) {
    let p = load_problem(&fixture(problem)).unwrap();
    let report = verify(&p).unwrap();
    let svg = plot::render(&p, &report).unwrap();
    (report, svg)
}

#[test]
fn diamond_plot_has_four_quadrant_regions_and_the_outline() {
    let (_, svg) = plot_for("diamond_contract.problem.json");
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("class=\"region\"").count(), 4);
    assert_eq!(svg.matches("class=\"slice\"").count(), 4);
    for bits in ["1010", "0110", "1001", "0101"] {
        assert!(
            svg.contains(&format!("data-indicator=\"{bits}\"")),
            "{bits}"
        );
    }
    assert_eq!(svg.matches("class=\"witness\"").count(), 0);
    assert!(svg.contains("class=\"contour initial\" d=\"M"));
    assert!(svg.contains("class=\"contour unsafe\" d=\"M"));
}

#[test]
fn witnesses_become_markers() {
    let (report, svg) = plot_for("diamond_shifted_init.problem.json");
    let expected = report
        .witnesses
        .iter()
        .filter(|w| w.point.len() == 2)
        .count();
    assert!(expected > 0);
    assert_eq!(svg.matches("<circle class=\"witness\"").count(), expected);
}

#[test]
fn plotting_a_four_dimensional_problem_is_refused() {
    let p = load_problem(&fixture("linear4d.problem.json")).unwrap();
    let report = verify(&p).unwrap();
    assert!(matches!(
        plot::render(&p, &report),
        Err(CliError::UnsupportedDimension(4))
    ));
}

#[test]
fn plot_verb_round_trips_a_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let svg = dir.path().join("p.svg");
    let problem = fixture("diamond_drift.problem.json");
    let st = rbc()
        .arg("verify")
        .arg("--problem")
        .arg(&problem)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = rbc()
        .arg("plot")
        .arg("--problem")
        .arg(&problem)
        .arg("--report")
        .arg(&report)
        .arg("--out")
        .arg(&svg)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = fs::read_to_string(svg).unwrap();
    assert_eq!(text.matches("class=\"region\"").count(), 4);
    assert!(text.matches("class=\"witness\"").count() >= 1);
}

#[test]
fn empty_domain_intervals_and_unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("diamond.json"), dir.path().join("diamond.json")).unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    };
    let base = r#""network_path": "diamond.json", "dynamics": ["-x1", "-x2"], "initial_set": "1", "unsafe_set": "1""#;
    let p = write(
        "empty.json",
        &format!("{{{base}, \"domain_box\": [[0, 1], [2, 2]]}}"),
    );
    assert!(matches!(load_problem(&p), Err(CliError::Invalid(m)) if m.contains("interval 2")));
    let p = write(
        "short.json",
        &format!("{{{base}, \"domain_box\": [[0, 1]]}}"),
    );
    assert!(matches!(
        load_problem(&p),
        Err(CliError::DimensionMismatch(_))
    ));
    let p = write("extra.json", &format!("{{{base}, \"colour\": \"red\"}}"));
    assert!(matches!(load_problem(&p), Err(CliError::Parse { .. })));
    let p = write("budgets.json", &format!("{{{base}, \"budgets\": {{\"max_boxes\": 7}}, \"tolerances\": {{\"tol_margin\": 0.25}}, \"seed\": 5}}"));
    let loaded = load_problem(&p).unwrap();
    assert_eq!(loaded.config.max_boxes, 7);
    assert_eq!(loaded.config.tol_margin, 0.25);
    assert_eq!(loaded.config.seed, 5);
}
