//! End-to-end tests of the carnot binary: exit codes, golden reports, and
//! round-trips of emitted files.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is a JSON report")
}

/// Zero the wall time so reports are comparable across runs.
fn normalize(mut v: serde_json::Value) -> serde_json::Value {
    v["wall_time_ms"] = serde_json::json!(0.0);
    v
}

#[test]
fn exit_codes_follow_the_verdicts() {
    assert_eq!(
        run(&["algebra", "check", "examples/heisenberg3.json"])
            .status
            .code(),
        Some(0)
    );
    // Mathematical refutation → 1.
    assert_eq!(
        run(&["algebra", "asymmetry", "examples/heisenberg3.json"])
            .status
            .code(),
        Some(1)
    );
    // Missing file → 2.
    let out = run(&["algebra", "check", "examples/nope.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // Unknown subcommand → 2 (clap's usage error).
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_json_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&["algebra", "check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn field_mismatch_is_an_error() {
    // Algebra declared over Q(√2) fed to a map over Q(√3).
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h3_sqrt2.json");
    let mut alg: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/heisenberg3.json"),
        )
        .unwrap(),
    )
    .unwrap();
    alg["field"] = serde_json::json!({"sqrt": 2});
    std::fs::write(&path, serde_json::to_string(&alg).unwrap()).unwrap();
    let out = run(&[
        "spectrum",
        "verify",
        "examples/smale_unstable.json",
        "--algebra",
        path.to_str().unwrap(),
        "--theorem",
        "heis",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("√"));
}

#[test]
fn golden_reports_are_stable() {
    let cases: &[(&str, &[&str])] = &[
        ("heisenberg3_check", &["algebra", "check", "examples/heisenberg3.json"]),
        ("heisenberg3_asymmetry", &["algebra", "asymmetry", "examples/heisenberg3.json"]),
        ("filiform_r3_asymmetry", &["algebra", "asymmetry", "examples/filiform_r3.json"]),
        ("martinet_cone_origin", &["cone", "compute", "examples/martinet.json", "--point", "0,0,0"]),
        ("heisenberg_cone", &["cone", "compute", "examples/heisenberg_horizontal.json"]),
        (
            "smale_unstable_heis",
            &[
                "spectrum", "verify", "examples/smale_unstable.json",
                "--algebra", "examples/heisenberg3.json", "--theorem", "heis",
            ],
        ),
        ("smale_build", &["anosov", "build", "--example", "smale"]),
        (
            "smale_lyapunov",
            &[
                "lyapunov", "estimate", "--system", "examples/smale_system.json",
                "--iters", "2000", "--seed", "7",
            ],
        ),
    ];
    for (name, args) in cases {
        let out = run(args);
        assert!(
            out.status.code() == Some(0) || out.status.code() == Some(1),
            "{name}: unexpected exit {:?}",
            out.status.code()
        );
        let got = normalize(report(&out));
        let golden_path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(format!("{name}.json"));
        let golden: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&golden_path).unwrap()).unwrap();
        assert_eq!(got, golden, "{name}: report drifted from its golden file");
    }
}

#[test]
fn cone_report_is_isomorphic_to_h3() {
    let out = run(&["cone", "compute", "examples/heisenberg_horizontal.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let cone = &r["verdicts"]["cone"];
    assert_eq!(
        cone["brackets"],
        serde_json::json!([{"i": 0, "j": 1, "out": {"2": "1"}}])
    );
    assert_eq!(cone["grading"], serde_json::json!([[0, 1], [2]]));
}

#[test]
fn emitted_system_round_trips() {
    let out = run(&["anosov", "build", "--example", "smale"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("system.json");
    std::fs::write(&path, serde_json::to_string(&r["verdicts"]["system"]).unwrap()).unwrap();
    let sys = carnot::io::read_system(&path).unwrap();
    assert_eq!(sys.lambda, carnot::scalar::Scalar::quad_int(2, 1, 3));
    // Estimating on the re-read file works and matches the exact spectrum.
    let out = run(&[
        "lyapunov",
        "estimate",
        "--system",
        path.to_str().unwrap(),
        "--iters",
        "500",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["verdicts"]["max_deviation"].as_f64().unwrap() < 1e-10);
}

#[test]
fn rejected_construction_exits_one_with_diagnostic() {
    let out = run(&[
        "anosov",
        "build",
        "--algebra",
        "examples/heisenberg3_flag.json",
        "--lambda",
        "3/2+1*r",
        "--sqrt",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!(r["verdicts"]["rejected"]
        .as_str()
        .unwrap()
        .contains("non-integral"));
}

#[test]
fn table_format_renders_flat_lines() {
    let out = run(&[
        "algebra",
        "check",
        "examples/heisenberg3.json",
        "--format",
        "table",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verdict jacobi: ok"));
    assert!(text.contains("verdict grading: graded_carnot"));
    assert!(text.contains("verdict nilpotent: true"));
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "algebra",
        "check",
        "examples/heisenberg5.json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["verdicts"]["grading"], serde_json::json!("graded_carnot"));
}
