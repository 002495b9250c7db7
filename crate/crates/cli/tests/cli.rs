use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn isl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isl"))
        .args(args)
        .current_dir(dir)
        .env_remove("ISL_LOG")
        .output()
        .expect("isl runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error record");
    serde_json::from_str(line).expect("error record is JSON")
}

#[test]
fn hitchin_csv_has_metadata_header_and_sibling_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = isl(
        &[
            "hitchin",
            "--r",
            "0.25",
            "--s",
            "0.25",
            "--tau-path",
            "1.0i:1.3i",
            "--samples",
            "20",
            "--check",
            "pvi",
            "--out",
            "traj.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# isl "));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "tau_re,tau_im,p_re,p_im,A_re,A_im,wp_re,wp_im");
    assert!(text.contains("# e-ordering"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 21);

    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("traj.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["command"], "hitchin");
    assert_eq!(report["checks"][0]["name"], "pvi");
    assert_eq!(report["checks"][0]["pass"], true);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "flow",
        "--weights",
        "0,0.25,0,0",
        "--p",
        "0.2+0.3j",
        "--a",
        "0.1",
        "--tau-path",
        "1j:1.1+1.2j",
        "--samples",
        "10",
        "--format",
        "json",
    ];
    let a = isl(&args, dir.path());
    let b = isl(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json_stdout(&a);
    assert_eq!(v["table"]["rows"].as_array().unwrap().len(), 11);
}

#[test]
fn convert_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("eq.json"),
        r#"{"tau":"0.1+1.1j","weights":["0.2","0.3","0","0.6"],"p":"0.2+0.3j","A":"0.1+0.2j"}"#,
    )
    .unwrap();
    let out = isl(
        &["convert", "--direction", "lame2fuchs", "--input", "eq.json"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_stdout(&out);
    assert_eq!(v["round_trip"], "pass");
    assert!(v["round_trip_error"].as_f64().unwrap() < 1e-10);

    let mut fuchsian = v["fuchsian"].clone();
    fuchsian["tau"] = v["lame"]["tau"].clone();
    fs::write(dir.path().join("fuchs.json"), fuchsian.to_string()).unwrap();
    let back = isl(
        &[
            "convert",
            "--direction",
            "fuchs2lame",
            "--input",
            "fuchs.json",
        ],
        dir.path(),
    );
    assert!(
        back.status.success(),
        "{}",
        String::from_utf8_lossy(&back.stderr)
    );
    assert_eq!(json_stdout(&back)["round_trip"], "pass");
}

#[test]
fn verify_accepts_the_suite_alias() {
    let dir = tempfile::tempdir().unwrap();
    let out = isl(
        &[
            "verify",
            "--suite",
            "lemma-2.2",
            "--tau",
            "0.2+1.3j",
            "--points",
            "3",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let v = json_stdout(&out);
    assert_eq!(v["suite"], "tau-derivatives");
    assert_eq!(v["checks"][0]["pass"], true);
}

#[test]
fn monodromy_of_the_explicit_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = isl(
        &[
            "monodromy",
            "--tau",
            "1j",
            "--r",
            "0.3",
            "--s",
            "0.2",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_stdout(&out);
    assert_eq!(v["checks"][0]["pass"], true);
    assert!(v["generators"]["ell1"]["trace"].is_string());
}

#[test]
fn scenario_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        r#"
kind = "hitchin"
path = ["1.0i", "1.2i"]

[parameters]
r = "0.25"
s = "0.25"
samples = 10
check = ["pvi"]

[output]
file = "scenario.json"
format = "json"
"#,
    )
    .unwrap();
    let out = isl(&["--config", "run.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scenario.json")).unwrap())
            .unwrap();
    assert_eq!(v["command"], "hitchin");
    assert_eq!(v["table"]["rows"].as_array().unwrap().len(), 11);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_weights = isl(
        &["eval", "--tau", "1j", "--z", "0.1", "--weights", "1,2"],
        dir.path(),
    );
    assert_eq!(bad_weights.status.code(), Some(2));

    let lower_half = isl(&["eval", "--tau", "-1j", "--z", "0.1"], dir.path());
    assert_eq!(lower_half.status.code(), Some(2));
    assert_eq!(error_record(&lower_half)["error"]["exit_code"], 2);

    let on_half_period = isl(
        &["flow", "--tau-path", "1j:1.2j", "--p", "0.5", "--a", "0.1"],
        dir.path(),
    );
    assert_eq!(on_half_period.status.code(), Some(2));
    assert_eq!(error_record(&on_half_period)["error"]["kind"], "validation");

    fs::write(
        dir.path().join("bad.toml"),
        "kind = \"eval\"\n[extra]\nx = 1\n",
    )
    .unwrap();
    let bad_config = isl(&["--config", "bad.toml"], dir.path());
    assert_eq!(bad_config.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let pole = isl(&["eval", "--tau", "1j", "--z", "0"], dir.path());
    assert_eq!(pole.status.code(), Some(3));
    assert_eq!(error_record(&pole)["error"]["kind"], "numerical");

    // Brute-force lattice sums lose accuracy on a nearly degenerate torus.
    let thin = isl(
        &[
            "verify",
            "--suite",
            "oracle",
            "--tau",
            "0.45+0.05j",
            "--points",
            "3",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(thin.status.code(), Some(3));
    assert_eq!(json_stdout(&thin)["checks"][0]["pass"], false);
    assert_eq!(error_record(&thin)["error"]["kind"], "check_failed");
}
