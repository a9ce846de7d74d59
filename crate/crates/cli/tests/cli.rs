use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use matroidx::instance::fixtures;
use matroidx::{rational, InstanceSpec, Rational};
use serde_json::Value;

fn matroidx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matroidx"))
        .args(args)
        .env_remove("MATROIDX_BUDGET_COPIES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, spec: &InstanceSpec) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, spec.to_json()).unwrap();
    path
}

fn weight(report: &str) -> Rational {
    let v: Value = serde_json::from_str(report).unwrap();
    rational::parse(v["weight"].as_str().expect("weight is a string")).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = ["a.json", "b.json"]
        .iter()
        .map(|f| dir.path().join(f))
        .collect();
    for f in &files {
        let args = [
            "gen",
            "--family1",
            "graphic",
            "--family2",
            "partition",
            "-n",
            "10",
            "--seed",
            "7",
        ];
        stdout(&matroidx(
            &[&args[..], &["--out", f.to_str().unwrap()]].concat(),
        ));
    }
    let (a, b) = (
        std::fs::read(&files[0]).unwrap(),
        std::fs::read(&files[1]).unwrap(),
    );
    assert_eq!(a, b);
    let spec = InstanceSpec::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(spec.n, 10);
    let other = stdout(&matroidx(&[
        "gen",
        "--family1",
        "linear_gf2",
        "-n",
        "10",
        "--seed",
        "7",
    ]));
    assert_ne!(other.as_bytes(), &a[..]);
}

#[test]
fn unit_weights_are_all_one() {
    let spec = InstanceSpec::from_json(&stdout(&matroidx(&[
        "gen",
        "-n",
        "15",
        "--weights",
        "uniform:1",
    ])))
    .unwrap();
    assert!(spec.weights.iter().all(|w| *w == rational::int(1)));
}

#[test]
fn log_uniform_respects_the_aspect_ratio() {
    for seed in 0..10 {
        let s = seed.to_string();
        let out = stdout(&matroidx(&[
            "gen",
            "-n",
            "20",
            "--seed",
            &s,
            "--weights",
            "log-uniform:100",
        ]));
        let spec = InstanceSpec::from_json(&out).unwrap();
        let max = spec.weights.iter().max().unwrap();
        let min = spec.weights.iter().min().unwrap();
        assert!(max / min <= rational::int(100));
    }
}

#[test]
fn solve_e1_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &fixtures::e1());
    for solver in ["exact", "greedy"] {
        let out = stdout(&matroidx(&[
            "solve",
            e1.to_str().unwrap(),
            "--solver",
            solver,
        ]));
        assert_eq!(weight(&out), rational::int(4), "{solver}");
    }
    let empty = write(dir.path(), "empty.json", &fixtures::empty());
    for model in ["static", "stream"] {
        let out = stdout(&matroidx(&[
            "solve",
            empty.to_str().unwrap(),
            "--model",
            model,
            "--solver",
            "greedy",
        ]));
        assert_eq!(weight(&out), rational::int(0), "{model}");
    }
}

#[test]
fn solve_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &fixtures::e1());
    let out = dir.path().join("report.json");
    let o = matroidx(&[
        "solve",
        e1.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout(&o).is_empty());
    assert_eq!(
        weight(&std::fs::read_to_string(out).unwrap()),
        rational::int(4)
    );
}

#[test]
fn stream_one_pass_is_half_minus_eps() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &fixtures::e1());
    let out = stdout(&matroidx(&[
        "solve",
        e1.to_str().unwrap(),
        "--model",
        "stream",
        "--solver",
        "greedy",
        "--order",
        "random:1",
    ]));
    assert!(weight(&out) >= rational::ratio(8, 5));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passes"], 1);
}

#[test]
fn comm_runs_the_greedy_protocol_only() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = write(dir.path(), "f1.json", &fixtures::figure1());
    let path = f1.to_str().unwrap();
    let out = stdout(&matroidx(&[
        "solve",
        path,
        "--model",
        "comm",
        "--solver",
        "greedy",
        "--partition",
        "0,1",
    ]));
    assert!(weight(&out) > rational::int(0));
    let o = matroidx(&["solve", path, "--model", "comm", "--solver", "exact"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 3,").unwrap();
    let o = matroidx(&["solve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse"));
}

#[test]
fn unknown_suite_is_rejected() {
    let o = matroidx(&["verify", "no-such-suite"]);
    assert!(!o.status.success());
}

#[test]
fn corrupted_axioms_fail_with_a_witness() {
    let o = matroidx(&["verify", "axioms", "--cases", "3", "--corrupt"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["violations"].as_u64().unwrap() >= 1);
    assert!(v["counterexamples"][0]["message"]
        .as_str()
        .unwrap()
        .contains("witness"));
}

#[test]
fn small_suites_pass() {
    for (suite, cases) in [
        ("unfold-equivalence", "20"),
        ("duals", "10"),
        ("axioms", "10"),
    ] {
        let v: Value =
            serde_json::from_str(&stdout(&matroidx(&["verify", suite, "--cases", cases]))).unwrap();
        assert_eq!(v["violations"], 0, "{suite}");
    }
}

#[test]
fn bench_single_cell_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("rows.csv");
    let summary = dir.path().join("summary.json");
    let o = matroidx(&[
        "bench",
        "--instances",
        "1",
        "--weights",
        "uniform:4",
        "--solver",
        "exact",
        "--epsilon",
        "1/4",
        "--out",
        csv_path.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    stdout(&o);
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "instance_id",
            "family1",
            "family2",
            "n",
            "weights",
            "weight_param",
            "epsilon",
            "solver",
            "output_weight",
            "reference_weight",
            "ratio",
            "composed_bound",
            "independence_calls",
            "rank_calls",
            "unfolded_calls",
            "classes",
            "max_class_weight",
            "wall_ms",
        ]
    );
    assert_eq!(r.records().count(), 1);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["growth"].as_array().unwrap().len(), 1);
}

#[test]
fn copy_budget_env_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write(dir.path(), "e1.json", &fixtures::e1());
    let o = Command::new(env!("CARGO_BIN_EXE_matroidx"))
        .args(["solve", e1.to_str().unwrap()])
        .env("MATROIDX_BUDGET_COPIES", "1")
        .output()
        .unwrap();
    assert!(!o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_matroidx"))
        .args(["solve", e1.to_str().unwrap()])
        .env("MATROIDX_BUDGET_COPIES", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
