use std::process::{Command, Output};

use serde_json::Value;

const SINGLE_MODE_BOX: &str = "6.283185307179586";

fn polaron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn validate(doc: &Value) {
    let schema: Value = serde_json::from_str(include_str!("../schema/scan.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn polaron_single_point_csv() {
    let o = polaron(&["polaron", "--box", SINGLE_MODE_BOX, "--mu", "0.5", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# polaron "));
    let rows = body(&text);
    assert_eq!(rows.len(), 2);
    let header: Vec<&str> = rows[0].split(',').collect();
    let row: Vec<&str> = rows[1].split(',').collect();
    let e_p: f64 = row[header.iter().position(|c| *c == "e_p").unwrap()].parse().unwrap();
    assert!((e_p + 1.0).abs() < 1e-8, "{e_p}");
}

#[test]
fn critical_mass_row() {
    let o = polaron(&["critical-mass", "--epsilon", "0", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows = body(&text);
    let m_star: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((1.22..1.23).contains(&m_star), "{m_star}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["polaron", "--mu", ""][..],
        &["polaron", "--mu", "lin:0:1:0"],
        &["certify", "--suite", "unknown"],
        &["polaron", "--format", "xml"],
        &["polaron", "--tol", "-1"],
        &["polaron", "--mu", "1", "--mu-tilde", "2", "--config", "/nonexistent"],
        &["stability", "--bogus"],
    ] {
        let o = polaron(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn failing_points_give_partial_failure() {
    let o = polaron(&["gtable", "--mu", "1", "--tau=-2,0", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let rows = body(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",error,"));
    assert!(rows[2].contains(",ok,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    std::fs::write(&cfg, "mass-ratio = 2\nmass-ratio = 3\nepsilon = 0\nformat = json\n").unwrap();
    let out = dir.path().join("out.json");
    let o = polaron(&[
        "stability",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    validate(&doc);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["mass_ratio"], 2.0);
    assert_eq!(rows[1]["mass_ratio"], 3.0);
    assert!(rows.iter().all(|r| r["epsilon"] == 1e-3));
}

#[test]
fn json_outputs_validate_against_schema() {
    for args in [
        &["gtable", "--mu", "1", "--qx", "0,0.5", "--tau=-0.5,1"][..],
        &["perturbed", "--box", SINGLE_MODE_BOX, "--mu", "0.5", "--r", "0,0.01"],
        &["certify", "--suite", "shell-count", "--cases", "5"],
        &["critical-mass"],
    ] {
        let mut full = args.to_vec();
        full.extend(["--format", "json", "--threads", "1"]);
        let o = polaron(&full);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
        validate(&doc);
        assert_eq!(doc["manifest"]["mode"], args[0]);
    }
}

#[test]
fn config_hash_ignores_flag_spelling_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "epsilon=0\nmass-ratio=2\n").unwrap();
    let a = polaron(&["stability", "--config", cfg.to_str().unwrap(), "--threads", "1"]);
    let b = polaron(&["stability", "--mass-ratio", "2", "--epsilon", "0", "--threads", "1"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn certify_reports_one_summary_per_suite() {
    let o = polaron(&["certify", "--suite", "sum-integral,shell-count", "--cases", "6", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let summaries: Vec<&str> = body(&text).into_iter().filter(|l| l.split(',').nth(1) == Some("all")).collect();
    assert_eq!(summaries.len(), 2);
    assert!(summaries[0].starts_with("sum-integral,all,true,"));
    assert!(summaries[1].starts_with("shell-count,all,true,"));
}

#[test]
fn help_documents_units() {
    let o = polaron(&["polaron", "--help"]);
    let text = stdout(&o);
    assert!(text.contains("--mass-ratio"));
    let o = polaron(&["--help"]);
    assert!(stdout(&o).contains("critical-mass"));
    let o = polaron(&["help", "polaron"]);
    assert!(o.status.success());
    let long = polaron(&["polaron", "--help"]);
    assert!(stdout(&long).contains("kinetic energy k²"), "{}", stdout(&long));
}
