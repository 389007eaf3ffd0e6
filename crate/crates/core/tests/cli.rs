use std::process::{Command, Output};

use serde_json::Value;

fn k2rank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_k2rank"))
        .args(args)
        .env_remove("K2_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON object")
}

#[test]
fn rank4_reports() {
    assert_eq!(json(&k2rank(&["rank4", "--d", "15"]))["four_rank"], 1);
    let v = json(&k2rank(&["rank4", "--d", "-15"]));
    assert_eq!(v["four_rank"], 0);
    assert_eq!(v["primes"], "3;5");
    assert_eq!(json(&k2rank(&["rank4", "--d=-161"]))["four_rank"], 1);
}

#[test]
fn rank4_rejects_bad_input() {
    let out = k2rank(&["rank4", "--d", "45"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not odd squarefree"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert_eq!(k2rank(&["rank4", "--d", "1"]).status.code(), Some(2));
    assert_eq!(k2rank(&["rank4"]).status.code(), Some(2));
}

#[test]
fn survey_json_and_csv() {
    let v = json(&k2rank(&["survey", "--family", "ODD", "--min", "3", "--max", "9"]));
    assert_eq!(v["total"], 3);
    assert_eq!(v["family"], "ODD");
    for k in ["0", "1", "2", "3"] {
        assert!(v["counts"][k].is_u64(), "{v}");
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("y.csv");
    let args = [
        "survey", "--family", "Y", "--min", "15", "--max", "2000", "--format", "csv", "--out",
        path.to_str().unwrap(),
    ];
    assert!(k2rank(&args).status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("d,t,primes,two_is_norm,minus_one_is_norm,v,rank,a,a_prime,four_rank")
    );
    assert_eq!(lines.next().unwrap().split(',').next(), Some("-15"));
    assert!(!text.contains('\r'));
}

#[test]
fn survey_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3", "8"] {
        for format in ["csv", "json"] {
            let path = dir.path().join(format!("{threads}.{format}"));
            let out = k2rank(&[
                "survey", "--family", "PLR", "--min", "105", "--max", "60000", "--format", format,
                "--threads", threads, "--out", path.to_str().unwrap(),
            ]);
            assert!(out.status.success());
            files.push((format, std::fs::read(&path).unwrap()));
        }
    }
    for f in &files[2..] {
        let first = if f.0 == "csv" { &files[0].1 } else { &files[1].1 };
        assert_eq!(&f.1, first);
    }

    let with_env = Command::new(env!("CARGO_BIN_EXE_k2rank"))
        .args(["survey", "--family", "PLR", "--min", "105", "--max", "60000"])
        .env("K2_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, files[1].1);
}

#[test]
fn survey_rejects_bad_flags() {
    for args in [
        &["survey", "--family", "Z", "--min", "3", "--max", "9"][..],
        &["survey", "--family", "X", "--min", "1", "--max", "9"],
        &["survey", "--family", "X", "--min", "30", "--max", "9"],
        &["survey", "--family", "X", "--min", "3", "--max", "9", "--format", "xml"],
    ] {
        assert_eq!(k2rank(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn density_reports() {
    let a = json(&k2rank(&["density", "--p", "17", "--family", "A", "--lmax", "100000"]));
    assert_eq!(a["positive"]["theoretical"]["1"], "3/4");
    assert_eq!(a["positive"]["theoretical"]["2"], "1/4");
    assert_eq!(a["negative"]["theoretical"]["1"], "1/2");
    let b = json(&k2rank(&["density", "--p", "17", "--family", "B", "--lmax", "100000"]));
    assert_eq!(b["positive"]["theoretical"]["0"], "1/2");
    assert_eq!(b["positive"]["theoretical"]["1"], "1/2");
    assert_eq!(k2rank(&["density", "--p", "19", "--family", "A"]).status.code(), Some(2));
}

#[test]
fn verify_suites() {
    for (suite, max) in [("symbols", "10000"), ("tables", "100000"), ("prop44", "100000"), ("forms", "20000")] {
        let v = json(&k2rank(&["verify", "--suite", suite, "--max", max]));
        assert_eq!(v["failures"], 0, "{suite}: {v}");
    }
    let out = k2rank(&["verify", "--suite", "rankinv", "--max", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["counterexamples"][0].as_str().unwrap().starts_with("d = 7:"));
    assert_eq!(k2rank(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
