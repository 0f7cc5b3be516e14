use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stlmine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stlmine")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn gen_small(dir: &Path, seed: &str) {
    let out = dir.to_str().unwrap();
    let v = json(&stlmine(&[
        "gen", "naval", "--seed", seed, "--out", out, "--n-normal", "20", "--n-red", "10", "--n-blue", "10",
    ]));
    assert_eq!((v["positives"].as_u64(), v["negatives"].as_u64()), (Some(20), Some(20)));
}

#[test]
fn robust_prints_a_number() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    fs::write(&trace, "time,x1\n0,5\n1,0\n").unwrap();
    let t = trace.to_str().unwrap();
    assert_eq!(stdout(&stlmine(&["robust", "--formula", "(x1 > 3)", "--trace", t])).trim(), "2");
    assert_eq!(stdout(&stlmine(&["robust", "--formula", "(x1 > 3)", "--trace", t, "--index", "1"])).trim(), "-3");
    assert_eq!(stdout(&stlmine(&["robust", "--formula", "F[5,6] (x1 > 3)", "--trace", t])).trim(), "\"-inf\"");
}

#[test]
fn classify_reports_confusion() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "3");
    let v = json(&stlmine(&[
        "classify",
        "--formula",
        "(x2 > 22.46) U[49,287] (x1 <= 31.65)",
        "--data",
        dir.path().to_str().unwrap(),
    ]));
    // The generator guarantees the reference formula is exact.
    assert_eq!(v["misclassification_rate"].as_f64(), Some(0.0));
    assert_eq!(v["true_positives"].as_u64(), Some(20));
    assert_eq!(v["true_negatives"].as_u64(), Some(20));
}

#[test]
fn gen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_small(a.path(), "9");
    gen_small(b.path(), "9");
    for class in ["positive", "negative"] {
        let mut names: Vec<_> = fs::read_dir(a.path().join(class)).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 20);
        for n in names {
            assert_eq!(fs::read(a.path().join(class).join(&n)).unwrap(), fs::read(b.path().join(class).join(&n)).unwrap());
        }
    }
}

#[test]
fn failures_exit_nonzero() {
    let o = stlmine(&["robust", "--formula", "x1 >", "--trace", "nope.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    let o = stlmine(&["mine", "--data", "nowhere"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stlmine(&["mine", "--data", "/definitely/not/here", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mine_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "4");
    let d = dir.path().to_str().unwrap();
    let args = ["mine", "--data", d, "--seed", "21", "--ne", "8", "--ng", "3", "--budget", "12", "--final-budget", "20"];
    let mut a = json(&stlmine(&args));
    let mut b = json(&stlmine(&args));
    a["elapsed_seconds"] = 0.into();
    b["elapsed_seconds"] = 0.into();
    assert_eq!(a, b);
    assert_eq!(a["seed"].as_u64(), Some(21));
    stlmine::stl::parse(a["best_formula"].as_str().unwrap()).unwrap();
}
