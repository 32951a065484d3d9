use std::path::Path;
use std::process::{Command, Output};

use harsanyi_core::dataset::{relation_template_record, write_records, SampleRecord};

fn harsanyi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harsanyi"))
        .args(args)
        .env_remove("HARSANYI_CACHE_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("data.jsonl");
    let mut args = vec!["generate", "--samples", "6", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    assert!(harsanyi(&args).status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn axioms_pass_by_default() {
    let o = harsanyi(&["axioms", "--games", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    for name in ["linearity", "dummy", "symmetry", "efficiency"] {
        assert!(out.contains(name));
    }
}

#[test]
fn injected_fault_names_the_axiom() {
    let o = harsanyi(&["axioms", "--games", "5", "--inject-fault", "symmetry"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failed: symmetry"));
}

#[test]
fn missing_second_image_is_a_precondition_error_naming_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), &["--no-second-image"]);
    let out = dir.path().join("r.csv");
    let o = harsanyi(&[
        "diagnose-image",
        "--oracle",
        "toy:1",
        "--dataset",
        &data,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("relation-0000"), "{}", stderr(&o));
}

#[test]
fn identical_samples_flag_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<SampleRecord> = ["a", "b"]
        .iter()
        .map(|id| {
            let mut r = relation_template_record(id, "shared-image", "horse", "eating", "grass");
            r.caption_1.id = "t1".into();
            r.caption_2.id = "t2".into();
            r
        })
        .collect();
    let data = dir.path().join("same.jsonl");
    write_records(&data, &records).unwrap();
    let out = dir.path().join("c.csv");
    let o = harsanyi(&[
        "correlate",
        "--side",
        "text",
        "--oracle",
        "toy:2",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("rho_R&O,aggregate:zero_variance,NaN,2"), "{csv}");
    assert!(String::from_utf8(o.stdout).unwrap().contains("zero_variance"));
}

#[test]
fn correlate_needs_two_samples() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("one.jsonl");
    write_records(&data, &[relation_template_record("a", "i", "dog", "on", "table")]).unwrap();
    let out = dir.path().join("c.csv");
    let o = harsanyi(&[
        "correlate",
        "--side",
        "text",
        "--oracle",
        "toy",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn invalid_sample_file_exits_with_schema_code_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.jsonl");
    std::fs::write(&data, "{\"schema_version\": 1}\n").unwrap();
    let out = dir.path().join("r.csv");
    let args = [
        "diagnose-text",
        "--oracle",
        "toy",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let mut strict = args.to_vec();
    strict.push("--strict");
    let o = harsanyi(&strict);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(":1:"));
    // lenient mode skips the line and then has nothing to aggregate
    assert_eq!(harsanyi(&args).status.code(), Some(6));
}

#[test]
fn budget_above_cap_needs_the_unsafe_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), &[]);
    let out = dir.path().join("r.csv");
    let base = [
        "diagnose-text",
        "--oracle",
        "toy",
        "--dataset",
        &data,
        "--out",
        out.to_str().unwrap(),
    ];
    let mut over = base.to_vec();
    over.extend(["--budget", "22"]);
    assert_eq!(harsanyi(&over).status.code(), Some(2));
    over.push("--unsafe-budget");
    assert_eq!(harsanyi(&over).status.code(), Some(0));
}

#[test]
fn lattice_over_budget_exits_with_budget_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), &["--filler-tokens", "4"]);
    let out = dir.path().join("r.csv");
    let o = harsanyi(&[
        "diagnose-text",
        "--oracle",
        "toy",
        "--dataset",
        &data,
        "--out",
        out.to_str().unwrap(),
        "--budget",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn unreachable_remote_is_an_oracle_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(dir.path(), &[]);
    let out = dir.path().join("r.csv");
    // port 9 (discard) is closed on test machines
    let o = harsanyi(&[
        "diagnose-text",
        "--oracle",
        "remote:http://127.0.0.1:9",
        "--dataset",
        &data,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn unknown_oracle_and_subcommand_are_usage_errors() {
    assert_eq!(harsanyi(&["frobnicate"]).status.code(), Some(2));
    let o = harsanyi(&["diagnose-text", "--oracle", "clip", "--dataset", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = harsanyi(&[
        "diagnose-text",
        "--oracle",
        "toy",
        "--dataset",
        "/nonexistent/x.jsonl",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(7));
}
