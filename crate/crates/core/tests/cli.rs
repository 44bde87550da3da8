use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qicd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qicd"))
        .args(args)
        .current_dir(dir)
        .env_remove("QICD_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TRIANGLES: &str = "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n";

#[test]
fn detect_prints_q_and_writes_partition() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.el"), TRIANGLES).unwrap();
    let o = qicd(dir.path(), &["detect", "--graph", "t.el", "--method", "leiden"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "Q=0.500000\n");
    let csv = fs::read_to_string(dir.path().join("t.partition.csv")).unwrap();
    assert!(csv.starts_with("node_id,community_id\n"));
    assert_eq!(csv.lines().count(), 7);
    assert!(dir.path().join("t.partition.manifest.json").exists());
}

#[test]
fn edgeless_graph_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("e.el"), "# nodes: 4\n").unwrap();
    let o = qicd(dir.path(), &["detect", "--graph", "e.el"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("modularity undefined: graph has no edges"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.el"), TRIANGLES).unwrap();
    for args in [
        vec!["detect"],
        vec!["qicd", "--graph", "t.el", "--kind", "quantum"],
        vec!["mrg", "--graph", "t.el", "--nulls", "4"],
        vec!["benchmark", "--graph", "t.el", "--methods", "leiden,nope", "--out", "b"],
        vec!["benchmark", "--graph", "t.el", "--methods", "leiden", "--runs", "1", "--out", "b"],
        vec!["generate", "planted", "--n", "10", "--out", "g.el"],
        vec![],
    ] {
        let o = qicd(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qicd(dir.path(), &["detect", "--graph", "absent.el"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn clique_ring_has_expected_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = qicd(dir.path(), &["generate", "clique-ring", "--cliques", "10", "--size", "5", "--out", "r.el"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "nodes=50 edges=110\n");
    assert!(dir.path().join("r.truth.csv").exists());
    assert!(dir.path().join("r.manifest.json").exists());
}

#[test]
fn planted_writes_graph_truth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = qicd(
        dir.path(),
        &["generate", "planted", "--n", "1000", "--k", "10", "--p-in", "0.05", "--p-out", "0.03", "--seed", "7", "--out", "g.el"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["g.el", "g.truth.csv", "g.manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "generate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["generate"]["tolerance"], 0.01);
}

#[test]
fn qicd_on_clique_ring_finds_nothing_to_add() {
    let dir = tempfile::tempdir().unwrap();
    qicd(dir.path(), &["generate", "clique-ring", "--cliques", "10", "--size", "5", "--out", "r.el"]);
    let o = qicd(dir.path(), &["qicd", "--graph", "r.el", "--kind", "haar", "--seed", "1"]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.starts_with("Q*=0.809091 baseline=0.809091 MRG="), "{line}");
    let env: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.qicd.json")).unwrap()).unwrap();
    assert!(env["mrg"].as_f64().unwrap() <= 0.005);
    let trace = fs::read_to_string(dir.path().join("r.qicd.trace.csv")).unwrap();
    assert!(trace.starts_with("t,Q_ref,Q_quant,accepted,communities,millis\n"));
}

#[test]
fn zero_fraction_noise_is_never_accepted() {
    let dir = tempfile::tempdir().unwrap();
    qicd(
        dir.path(),
        &["generate", "planted", "--n", "200", "--k", "4", "--p-in", "0.1", "--p-out", "0.05", "--out", "g.el"],
    );
    let o = qicd(dir.path(), &["qicd", "--graph", "g.el", "--kind", "hu", "--fraction", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("g.qicd.trace.csv")).unwrap();
    assert!(trace.lines().skip(1).all(|l| l.split(',').nth(3) == Some("false")));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.el"), TRIANGLES).unwrap();
    fs::write(dir.path().join("run.cfg"), "# detector\nmethod=louvain\nseed=5\nrandom_tie_break=true\n").unwrap();
    let o = qicd(dir.path(), &["detect", "--config", "run.cfg", "--graph", "t.el", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.partition.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["detect"]["method"], "louvain");
    assert_eq!(m["config"]["detect"]["detector"]["random_tie_break"], true);
}

#[test]
fn seed_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.el"), TRIANGLES).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qicd"))
        .args(["detect", "--graph", "t.el"])
        .current_dir(dir.path())
        .env("QICD_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.partition.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    qicd(
        dir.path(),
        &["generate", "planted", "--n", "300", "--k", "5", "--p-in", "0.1", "--p-out", "0.02", "--out", "g.el"],
    );
    let run = |out: &str| {
        let o = qicd(dir.path(), &["qicd", "--graph", "g.el", "--kind", "pt-hu", "--seed", "3", "--out", out]);
        assert!(o.status.success());
    };
    run("a.csv");
    run("b.csv");
    for (x, y) in [("a.csv", "b.csv"), ("a.trace.csv", "b.trace.csv"), ("a.json", "b.json")] {
        assert_eq!(fs::read(dir.path().join(x)).unwrap(), fs::read(dir.path().join(y)).unwrap(), "{x}");
    }
}

#[test]
fn benchmark_single_method_has_no_p() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.el"), TRIANGLES).unwrap();
    let o = qicd(dir.path(), &["benchmark", "--graph", "t.el", "--methods", "leiden", "--runs", "2", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.summary.json")).unwrap()).unwrap();
    assert_eq!(s["baseline"], "leiden");
    assert!(s["methods"]["leiden"]["p_vs_baseline"].is_null());
    let runs = fs::read_to_string(dir.path().join("b.runs.csv")).unwrap();
    assert_eq!(runs.lines().next(), Some("method,run,seed,Q"));
    assert_eq!(runs.lines().count(), 3);
    let table = fs::read_to_string(dir.path().join("b.table.txt")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn benchmark_run_overrides() {
    let dir = tempfile::tempdir().unwrap();
    qicd(dir.path(), &["generate", "clique-ring", "--cliques", "4", "--size", "4", "--out", "r.el"]);
    let o = qicd(
        dir.path(),
        &["benchmark", "--graph", "r.el", "--methods", "louvain,leiden,leiden-hu", "--runs", "3,louvain=4", "--iterations", "2", "--out", "b"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.summary.json")).unwrap()).unwrap();
    assert_eq!(s["methods"]["louvain"]["n"], 4);
    assert_eq!(s["methods"]["leiden-hu"]["n"], 3);
}
