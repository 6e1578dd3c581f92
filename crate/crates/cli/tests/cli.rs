use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cqa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cqa-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn one_instance(dir: &Path) -> String {
    stdout(&cqa(
        dir,
        &[
            "gen", "--base", "c17", "--count", "1", "--seed", "3", "--out", "inst",
        ],
    ));
    "inst/c17-s3-0000.json".to_string()
}

#[test]
fn gen_is_deterministic() {
    let d = scratch("gen");
    for out in ["a", "b"] {
        stdout(&cqa(
            &d,
            &[
                "gen", "--base", "c17", "--count", "100", "--seed", "7", "--out", out,
            ],
        ));
    }
    let mut names: Vec<_> = std::fs::read_dir(d.join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 100);
    for n in names {
        let a = std::fs::read(d.join("a").join(&n)).unwrap();
        let b = std::fs::read(d.join("b").join(&n)).unwrap();
        assert_eq!(a, b, "{n:?}");
    }
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn spectrum_csv_starts_at_gap_four() {
    let d = scratch("spectrum");
    let inst = one_instance(&d);
    let text = stdout(&cqa(
        &d,
        &["spectrum", &inst, "--grid", "100", "--format", "csv"],
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,e0,e1,gap");
    assert_eq!(lines.len(), 101);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[3] - 4.0).abs() < 1e-9);
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn anneal_reports_success_probability() {
    let d = scratch("anneal");
    let inst = one_instance(&d);
    let v: Value = serde_json::from_str(&stdout(&cqa(
        &d,
        &["anneal", &inst, "--schedule", "param", "--tf", "40"],
    )))
    .unwrap();
    let p = v["success_probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(v["norm_drift"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["schedule"]["kind"], "param");
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn csv_and_json_agree() {
    let d = scratch("formats");
    let inst = one_instance(&d);
    let v: Value = serde_json::from_str(&stdout(&cqa(&d, &["mfd", &inst]))).unwrap();
    let csv = stdout(&cqa(&d, &["mfd", &inst, "--format", "csv"]));
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), v["degeneracy"].as_u64().unwrap() as usize);
    for (r, (idx, diag)) in rows.iter().zip(
        v["mfd_set"]
            .as_array()
            .unwrap()
            .iter()
            .zip(v["diagnoses"].as_array().unwrap()),
    ) {
        assert_eq!(r[0], v["min_faults"].to_string());
        assert_eq!(r[2], idx.to_string());
        assert_eq!(r[3], diag.as_str().unwrap());
    }
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn graph_check_passes_on_c17() {
    let d = scratch("graph");
    let inst = one_instance(&d);
    let v: Value = serde_json::from_str(&stdout(&cqa(&d, &["graph", &inst, "--check"]))).unwrap();
    assert_eq!(v["degree"], 21);
    assert_eq!(v["connected"], true);
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn exit_codes_and_error_json() {
    let d = scratch("errors");
    let o = cqa(&d, &["anneal", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(e["error"], "io");

    assert_eq!(cqa(&d, &["anneal"]).status.code(), Some(1));
    assert_eq!(
        cqa(&d, &["spectrum", "x.json", "--driver", "sideways"])
            .status
            .code(),
        Some(1)
    );

    // A 31-wire inverter chain has more free wires than the enumeration cap.
    let mut net = String::from("INPUT w0\nOUTPUT w30\n");
    for k in 0..30 {
        net.push_str(&format!("GATE g{k} INV w{k} -> w{}\n", k + 1));
    }
    let file = serde_json::json!({ "circuit": net, "inputs": "0", "outputs": "1" });
    std::fs::write(d.join("big.json"), file.to_string()).unwrap();
    let o = cqa(&d, &["mfd", "big.json"]);
    assert_eq!(o.status.code(), Some(2));
    let e: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(e["error"], "cap_exceeded");
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn failed_run_leaves_no_output() {
    let d = scratch("atomic");
    let inst = one_instance(&d);
    let o = cqa(
        &d,
        &[
            "anneal",
            &inst,
            "--schedule",
            "param",
            "--s0",
            "0.1",
            "--out",
            "r.json",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.join("r.json").exists());
    let leftovers = std::fs::read_dir(&d).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .file_name()
            .to_string_lossy()
            .contains(".tmp")
    });
    assert_eq!(leftovers.count(), 0);
    std::fs::remove_dir_all(&d).unwrap();
}

#[test]
fn campaign_writes_dataset() {
    let d = scratch("campaign");
    let spec = serde_json::json!({
        "base": "c17",
        "count": 2,
        "seed": 4,
        "grid": 10,
        "schedules": [{"kind": "linear", "tf": 5.0}, {"kind": "param", "tf": 5.0, "t0": 2.0, "s0": 0.75}],
    });
    std::fs::write(d.join("spec.json"), spec.to_string()).unwrap();
    let summary: Value = serde_json::from_str(&stdout(&cqa(
        &d,
        &["campaign", "spec.json", "--out", "run"],
    )))
    .unwrap();
    assert_eq!(summary["accepted"], 2);
    let agg = std::fs::read_to_string(d.join("run/aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 4);
    assert!(agg.starts_with(
        "instance_id,seed,min_faults,degeneracy,min_gap,gap_location,tf,success_probability"
    ));
    assert_eq!(
        std::fs::read_dir(d.join("run/instances")).unwrap().count(),
        2
    );
    std::fs::remove_dir_all(&d).unwrap();
}
