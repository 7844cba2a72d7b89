use std::path::Path;
use std::process::{Command, Output};

fn badsieve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_badsieve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn status(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("certificate on stdout");
    v["status"].as_str().unwrap().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn default_run_passes_and_prints_json() {
    let out = badsieve(&["--diag", "off"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(status(&out), "pass");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("survivors per level: 1 6 96"), "{err}");
}

#[test]
fn files_are_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut certs = Vec::new();
    let mut csvs = Vec::new();
    for i in 0..2 {
        let cert = dir.path().join(format!("c{i}.json"));
        let csv = dir.path().join(format!("i{i}.csv"));
        let out = badsieve(&[
            "--R",
            "2^4",
            "--out-cert",
            cert.to_str().unwrap(),
            "--out-intervals",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty(), "certificate goes to the file");
        certs.push(read(&cert));
        csvs.push(read(&csv));
    }
    assert_eq!(certs[0], certs[1]);
    assert_eq!(csvs[0], csvs[1]);
    assert!(csvs[0].starts_with("level,lineage,left_num,left_den,length_num,length_den\n"));
    assert_eq!(csvs[0].lines().count(), 1 + 1 + 6 + 96);

    let check = badsieve(&["check", dir.path().join("c0.json").to_str().unwrap()]);
    assert_eq!(
        code(&check),
        0,
        "{}",
        String::from_utf8_lossy(&check.stdout)
    );
    assert!(String::from_utf8_lossy(&check.stdout).contains("minimum matches: true"));
}

#[test]
fn check_rejects_a_tampered_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    assert_eq!(code(&badsieve(&["--out-cert", cert.to_str().unwrap()])), 0);
    let text = read(&cert).replacen("\"survivors\": 96", "\"survivors\": 95", 1);
    std::fs::write(&cert, text).unwrap();
    assert_eq!(code(&badsieve(&["check", cert.to_str().unwrap()])), 2);
}

#[test]
fn failing_and_empty_runs_exit_two() {
    let out = badsieve(&["--hmax", "1000000", "--diag", "off"]);
    assert_eq!(code(&out), 2);
    assert_eq!(status(&out), "fail");
    let out = badsieve(&["--R", "4", "--kappa", "1", "--delta", "1/3"]);
    assert_eq!(code(&out), 2);
    assert_eq!(status(&out), "empty");
}

#[test]
fn rejections_exit_three() {
    for args in [
        &["--strict"][..],
        &["--cap", "10"],
        &["--theta", "quad:1,1,1,4"],
        &["--R", "one"],
        &["--delta", "-1/2"],
    ] {
        let out = badsieve(args);
        assert_eq!(code(&out), 3, "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn missing_certificate_is_an_io_error() {
    let out = badsieve(&["check", "/nonexistent/cert.json"]);
    assert_eq!(code(&out), 1);
}
