use std::fs;
use std::path::Path;

use stlmine::data::{load_dataset, read_trace, write_dataset, Dataset};
use stlmine::harness::{generate_naval, NavalGenConfig};
use stlmine::{Error, Trace};

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn ramp(n: usize) -> String {
    let mut s = "time,x1,x2\n".to_string();
    for j in 0..n {
        s.push_str(&format!("{},{},{}\n", 5 * j, j, 2 * j));
    }
    s
}

#[test]
fn round_trip_preserves_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NavalGenConfig { n_normal: 8, n_anomalous_red: 4, n_anomalous_blue: 4, ..NavalGenConfig::with_seed(1) };
    let d = generate_naval(&cfg).unwrap();
    write_dataset(&d, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.positives(), d.positives());
    assert_eq!(back.negatives(), d.negatives());
    assert_eq!(back.manifest(), d.manifest());
}

#[test]
fn sample_count_mismatch_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("positive/a.csv"), &ramp(61));
    write(&dir.path().join("negative/b.csv"), &ramp(60));
    match load_dataset(dir.path()) {
        Err(Error::Schema { path, msg }) => {
            assert!(path.ends_with("b.csv"));
            assert!(msg.contains("60 samples"), "{msg}");
        }
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn variable_mismatch_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("positive/a.csv"), &ramp(5));
    write(&dir.path().join("negative/b.csv"), "time,x1,x3\n0,1,2\n5,1,2\n10,1,2\n15,1,2\n20,1,2\n");
    assert!(matches!(load_dataset(dir.path()), Err(Error::Schema { .. })));
}

#[test]
fn malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    for bad in [
        "t,x\n0,1\n1,2\n",
        "time,x\n0,1\n",
        "time,x\n0,1\n1,nan\n",
        "time,x\n0,1\n1,2\n3,3\n",
        "time,x\n1,1\n0,2\n",
        "time,x,x\n0,1,1\n1,2,2\n",
    ] {
        fs::write(&p, bad).unwrap();
        assert!(read_trace(&p).is_err(), "accepted {bad:?}");
    }
    fs::write(&p, "time, x\n0, 1\n0.5, 2\n").unwrap();
    let t = read_trace(&p).unwrap();
    assert_eq!((t.dt(), t.signal("x").unwrap()), (0.5, &[1.0, 2.0][..]));
}

#[test]
fn missing_or_empty_classes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
    write(&dir.path().join("positive/a.csv"), &ramp(4));
    fs::create_dir_all(dir.path().join("negative")).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Empty(_))));
}

#[test]
fn files_load_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("positive/b.csv"), "time,x\n0,2\n1,2\n");
    write(&dir.path().join("positive/a.csv"), "time,x\n0,1\n1,1\n");
    write(&dir.path().join("negative/c.csv"), "time,x\n0,3\n1,3\n");
    let d: Dataset = load_dataset(dir.path()).unwrap();
    let first: Vec<f64> = d.positives().iter().map(|t: &Trace| t.value(0, 0)).collect();
    assert_eq!(first, [1.0, 2.0]);
    assert!(d.manifest().is_none());
}
