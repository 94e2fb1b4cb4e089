use std::process::Command;

use relutrap::harness::{read_results, summary_path, CSV_HEADER};
use relutrap::io::{load_cifar, load_mnist_idx, write_fixtures};
use relutrap_core::data::CifarVariant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relutrap"))
}

#[test]
fn synthetic_experiment_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res.csv");
    let status = bin()
        .args(["experiment", "--dataset", "synthetic", "--M", "4", "--J", "1", "--E", "1", "--runs", "4", "--seed", "7"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 5);
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), [1, 0, 1, 0]);
    assert!(rows.iter().all(|r| r.t == r.t_hat));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary_path(&out)).unwrap()).unwrap();
    assert_eq!(summary["metrics"]["accuracy"], 100.0);
    assert_eq!(summary["config"]["J"], 1);
}

#[test]
fn attack_one_prints_a_row() {
    let out = bin().args(["attack-one", "--run-id", "3", "--seed", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("3,synthetic,sgd,4,1,1,32,"), "{}", lines[1]);
}

#[test]
fn bad_configuration_exits_one() {
    for args in [
        &["experiment", "--J", "0"][..],
        &["experiment", "--eps", "-1"],
        &["experiment", "--runs", "3"],
        &["experiment", "--bogus"],
        &["experiment", "--dataset", "imagenet"],
        &["experiment", "--dataset", "cifar100", "--data-dir", "/nonexistent"],
    ] {
        let out = bin().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn dedup_finds_the_planted_pair() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_fixtures(dir.path()).unwrap();
    let out = bin()
        .args(["dedup", "--format", "cifar100", "--train"])
        .arg(&f.dedup_train)
        .arg("--test")
        .arg(&f.dedup_test)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], "kind,train_id,other_id,label_a,label_b");
    assert!(lines[1].starts_with("within_train,1,6,"), "{}", lines[1]);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_ne!(f[3], f[4]);
}

#[test]
fn dedup_uses_label_names_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_fixtures(dir.path()).unwrap();
    let names: String = (0..100).map(|i| format!("class_{i}\n")).collect();
    std::fs::write(dir.path().join("fine_label_names.txt"), names).unwrap();
    let out = bin().args(["dedup", "--format", "cifar100", "--train"]).arg(&f.dedup_train).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.split(',').skip(3).all(|l| l.starts_with("class_")), "{row}");
}

#[test]
fn fixtures_parse() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["fixtures", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let f = write_fixtures(dir.path()).unwrap();
    let mnist = load_mnist_idx(&f.mnist_images, &f.mnist_labels).unwrap();
    assert_eq!(mnist.len(), 4);
    assert_eq!(mnist.image_shape(), [1, 28, 28]);
    let labels: Vec<usize> = mnist.samples().iter().map(|s| s.label.index()).collect();
    assert_eq!(labels, [5, 0, 4, 1]);
    let c10 = load_cifar(&f.cifar10, CifarVariant::Cifar10).unwrap();
    assert_eq!(c10.samples().iter().map(|s| s.label.index()).collect::<Vec<_>>(), [6, 9]);
    let c100 = load_cifar(&f.cifar100, CifarVariant::Cifar100).unwrap();
    assert_eq!(c100.samples().iter().map(|s| s.label.index()).collect::<Vec<_>>(), [30, 99]);
    assert_eq!(c100.image_shape(), [3, 32, 32]);
}

#[test]
fn gradcheck_passes_on_a_few_nets() {
    let out = bin().args(["gradcheck", "--nets", "3", "--seed", "11"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().filter(|l| l.ends_with(" ok")).count(), 3);
}
