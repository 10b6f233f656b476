//! End-to-end tests for the `tpsched` binary: exit codes, file round trips,
//! and the printed numbers on the reference diamond bundle.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tpsched"));
    c.env_remove("TPSCHED_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

struct DiamondFiles {
    dag: PathBuf,
    cluster: PathBuf,
    matrix: PathBuf,
    schedule: PathBuf,
}

/// The reference diamond bundle: exec {3,2,2,5} s on three uniform nodes,
/// file sizes giving 2/1/3/2 s transfers, manual schedule bottlenecked at
/// 5 s on n3.
fn diamond_files(dir: &Path) -> DiamondFiles {
    let dag = dir.join("dag.json");
    write(
        &dag,
        r#"{
          "tasks": ["t0", "t1", "t2", "t3"],
          "edges": [
            {"from": "t0", "to": "t1", "size_bytes": 2000000},
            {"from": "t0", "to": "t2", "size_bytes": 1000000},
            {"from": "t1", "to": "t3", "size_bytes": 3000000},
            {"from": "t2", "to": "t3", "size_bytes": 2000000}
          ],
          "entry": "t0",
          "exit": "t3"
        }"#,
    );
    let cluster = dir.join("cluster.json");
    write(
        &cluster,
        r#"{
          "nodes": ["n1", "n2", "n3"],
          "default_link": {"a": 0.0, "b": 1e-6, "c": 0.0},
          "links": []
        }"#,
    );
    let matrix = dir.join("matrix.json");
    write(
        &matrix,
        r#"{"exec": {
          "t0": {"n1": 3.0, "n2": 3.0, "n3": 3.0},
          "t1": {"n1": 2.0, "n2": 2.0, "n3": 2.0},
          "t2": {"n1": 2.0, "n2": 2.0, "n3": 2.0},
          "t3": {"n1": 5.0, "n2": 5.0, "n3": 5.0}
        }}"#,
    );
    let schedule = dir.join("schedule.json");
    write(
        &schedule,
        r#"{"assignment": {
          "t0": [{"node": "n1", "portion": 1.0}],
          "t1": [{"node": "n2", "portion": 1.0}],
          "t2": [{"node": "n2", "portion": 1.0}],
          "t3": [{"node": "n3", "portion": 1.0}]
        }}"#,
    );
    DiamondFiles { dag, cluster, matrix, schedule }
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["simulate", "--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(code(&run(&["--no-such-flag"])), 1);
    assert_eq!(code(&run(&["schedule"])), 1); // missing required args
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn simulate_reference_diamond_prints_200_per_1000s() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let out = run(&[
        "simulate",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", f.schedule.to_str().unwrap(),
        "--instances", "300",
        "--warmup", "30",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("200.00 per 1000 s"), "output: {text}");
    assert!(text.contains("period: 5.000000 s"), "output: {text}");
}

#[test]
fn simulate_writes_event_log_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let log = dir.path().join("events.csv");
    let out = run(&[
        "simulate",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", f.schedule.to_str().unwrap(),
        "--instances", "10",
        "--warmup", "2",
        "--event-log", log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "time,resource,event,instance,task");
    assert!(text.contains("exec_start"));
    assert!(text.contains("xfer_done"));
}

#[test]
fn schedule_heft_writes_valid_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let out_path = dir.path().join("heft.json");
    let out = run(&[
        "schedule",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--algorithm", "heft",
        "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("bottleneck"));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(parsed["assignment"]["t0"].is_array());
}

#[test]
fn schedule_manual_without_map_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let out = run(&[
        "schedule",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--algorithm", "manual",
        "--out", dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn cyclic_dag_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let bad = dir.path().join("cyclic.json");
    write(
        &bad,
        r#"{
          "tasks": ["t0", "t1"],
          "edges": [
            {"from": "t0", "to": "t1", "size_bytes": 1},
            {"from": "t1", "to": "t0", "size_bytes": 1}
          ],
          "entry": "t0",
          "exit": "t1"
        }"#,
    );
    let out = run(&[
        "schedule",
        "--dag", bad.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--algorithm", "heft",
        "--out", dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_json_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let bad = dir.path().join("broken.json");
    write(&bad, "{not json");
    let out = run(&[
        "simulate",
        "--dag", bad.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", f.schedule.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));
}

#[test]
fn missing_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let out = run(&[
        "simulate",
        "--dag", dir.path().join("nope.json").to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", f.schedule.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn refine_split_improves_stacked_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let stacked = dir.path().join("stacked.json");
    write(
        &stacked,
        r#"{"assignment": {
          "t0": [{"node": "n1", "portion": 1.0}],
          "t1": [{"node": "n1", "portion": 1.0}],
          "t2": [{"node": "n1", "portion": 1.0}],
          "t3": [{"node": "n1", "portion": 1.0}]
        }}"#,
    );
    let out_path = dir.path().join("split.json");
    let out = run(&[
        "refine",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", stacked.to_str().unwrap(),
        "--method", "split",
        "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    // The 12 s stack must have been spread across more than one node.
    let t3 = parsed["assignment"]["t3"].as_array().unwrap();
    let total: usize = parsed["assignment"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_array().unwrap().len())
        .sum();
    assert!(total > 4 || t3.len() > 1, "schedule unchanged: {parsed}");
}

#[test]
fn refine_dup_requires_out_dag() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let out = run(&[
        "refine",
        "--dag", f.dag.to_str().unwrap(),
        "--cluster", f.cluster.to_str().unwrap(),
        "--matrix", f.matrix.to_str().unwrap(),
        "--schedule", f.schedule.to_str().unwrap(),
        "--method", "dup",
        "--out", dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn fit_recovers_quadratic_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let transfers = dir.path().join("transfers.csv");
    // times on 1e-6 * size for link n1->n2, + reverse direction
    let mut rows = String::from("src,dst,size_bytes,time_s\n");
    for s in [1_000_000u64, 2_000_000, 3_000_000, 4_000_000] {
        rows.push_str(&format!("n1,n2,{s},{}\n", s as f64 * 1e-6));
        rows.push_str(&format!("n2,n1,{s},{}\n", s as f64 * 2e-6));
    }
    write(&transfers, &rows);
    let execs = dir.path().join("execs.csv");
    write(&execs, "task,node,time_s\nt0,n1,3.0\nt0,n2,3.5\nt1,n1,2.0\nt1,n2,2.5\n");

    let out_cluster = dir.path().join("cluster.json");
    let out_matrix = dir.path().join("matrix.json");
    let out = run(&[
        "fit",
        "--transfers", transfers.to_str().unwrap(),
        "--execs", execs.to_str().unwrap(),
        "--out-cluster", out_cluster.to_str().unwrap(),
        "--out-matrix", out_matrix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let cluster: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_cluster).unwrap()).unwrap();
    let links = cluster["links"].as_array().unwrap();
    assert_eq!(links.len(), 2);
    let b = links[0]["b"].as_f64().unwrap();
    assert!((b - 1e-6).abs() < 1e-12, "b = {b}");
    let matrix: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_matrix).unwrap()).unwrap();
    assert_eq!(matrix["exec"]["t0"]["n2"].as_f64().unwrap(), 3.5);
}

#[test]
fn fit_with_too_few_points_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let transfers = dir.path().join("transfers.csv");
    write(&transfers, "src,dst,size_bytes,time_s\nn1,n2,1000,0.001\nn1,n2,2000,0.002\n");
    let execs = dir.path().join("execs.csv");
    write(&execs, "task,node,time_s\nt0,n1,3.0\n");
    let out = run(&[
        "fit",
        "--transfers", transfers.to_str().unwrap(),
        "--execs", execs.to_str().unwrap(),
        "--out-cluster", dir.path().join("c.json").to_str().unwrap(),
        "--out-matrix", dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn gen_is_deterministic_and_seed_env_works() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a");
    let p2 = dir.path().join("b");
    for p in [&p1, &p2] {
        let out = bin()
            .args([
                "gen",
                "--shape", "layered-random",
                "--layers", "2",
                "--width", "2",
                "--nodes", "4",
                "--out-prefix", p.to_str().unwrap(),
            ])
            .env("TPSCHED_SEED", "77")
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    for suffix in ["-dag.json", "-cluster.json", "-matrix.json"] {
        let a = std::fs::read_to_string(format!("{}{suffix}", p1.display())).unwrap();
        let b = std::fs::read_to_string(format!("{}{suffix}", p2.display())).unwrap();
        assert_eq!(a, b, "{suffix} differs across identical seeds");
    }
}

#[test]
fn experiment_runs_grid_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = diamond_files(dir.path());
    let config = dir.path().join("exp.json");
    write(
        &config,
        &format!(
            r#"{{
              "bundles": [
                {{"name": "diamond", "dag": {:?}, "cluster": {:?}, "matrix": {:?}}},
                {{"name": "chain", "gen": {{"shape": "linear", "length": 4, "nodes": 4,
                  "compute_scale": 1.0, "comm_scale": 1.0, "heterogeneity": 0.0, "seed": 3}}}}
              ],
              "pipelines": [
                {{"scheduler": "heft"}},
                {{"scheduler": "tpheft"}},
                {{"scheduler": "heft", "refiner": "split"}}
              ],
              "instances": 200
            }}"#,
            f.dag.to_str().unwrap(),
            f.cluster.to_str().unwrap(),
            f.matrix.to_str().unwrap(),
        ),
    );
    let csv = dir.path().join("report.csv");
    let out = run(&[
        "experiment",
        "--config", config.to_str().unwrap(),
        "--out-csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("diamond") && text.contains("chain"));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().count(), 7); // header + 2 bundles x 3 pipelines
    assert!(csv_text.starts_with("bundle,pipeline,predicted_per_1000s"));
}
