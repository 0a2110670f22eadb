use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lazydyn"));
    cmd.env_remove("LAZYDYN_SEED")
        .env_remove("LAZYDYN_TRIALS")
        .env("RUST_LOG", "off");
    cmd
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

fn write_spec(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("spec.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_writes_one_row_per_trial() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["run", "--spec"])
        .arg(spec("k22_max_degree.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(out.path().join("trials.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# lazydyn"));
    assert_eq!(
        lines.next().unwrap(),
        "trial,seed,converged,steps,m0,M0,final_potential"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("true")));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["converged"], 100);
    assert!(summary["theorem_bound"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn drift_check_on_tightness_passes() {
    let status = bin()
        .args(["drift-check", "--spec"])
        .arg(spec("tightness4_drift.json"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(summary["configs"], 512);
    assert_eq!(summary["violations"], 0);
}

#[test]
fn violated_bound_exits_two() {
    // certain activation makes both endpoints swap forever
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(
        dir.path(),
        r#"{"instance": {"graph": {"family": "path", "n": 2}, "builder": "symmetric_coordination"},
            "schedule": {"kind": "constant", "p": 1.0, "window": {"p": 0.5, "q": 0.5}},
            "master_seed": 0}"#,
    );
    let status = bin()
        .args(["drift-check", "--spec"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn spec_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(
        dir.path(),
        r#"{"instance": {"graph": {"family": "path", "n": 2}, "builder": "minority"},
            "schedule": {"kind": "constant", "p": 0.5}}"#,
    );
    let status = bin().args(["run", "--spec"]).arg(&path).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("master_seed"));

    let status = bin()
        .args(["run", "--spec"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));

    // the adaptive schedule needs a coordination game
    let path = write_spec(
        dir.path(),
        r#"{"instance": {"graph": {"family": "path", "n": 3}, "builder": "minority"},
            "schedule": {"kind": "adaptive", "alpha": 0.3}, "master_seed": 1}"#,
    );
    let status = bin().args(["run", "--spec"]).arg(&path).output().unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn flags_and_environment_override_the_spec() {
    let run = |extra: &[&str], env: Option<(&str, &str)>| {
        let mut cmd = bin();
        cmd.args(["run", "--spec"])
            .arg(spec("k22_max_degree.json"))
            .args(extra);
        if let Some((k, v)) = env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap()
    };
    assert_eq!(run(&["--trials", "7"], None)["trials"], 7);
    assert_eq!(run(&[], Some(("LAZYDYN_TRIALS", "5")))["trials"], 5);
    assert_eq!(
        run(&["--seed", "99", "--trials", "3"], None)["master_seed"],
        99
    );
    assert_eq!(
        run(&["--trials", "3"], Some(("LAZYDYN_SEED", "98")))["master_seed"],
        98
    );
}

#[test]
fn gen_graph_writes_an_edge_list() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["gen-graph", "--spec"])
        .arg(spec("tightness_frontier.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(out.path().join("graph.edgelist")).unwrap();
    let g = lazydyn::Graph::from_edge_list(&text).unwrap();
    assert_eq!(g, lazydyn::tightness_network(12).unwrap().graph);
}

#[test]
fn shipped_specs_run() {
    for (command, name) in [
        ("oracle", "opinion_oracle.json"),
        ("frontier-check", "tightness_frontier.json"),
        ("sweep", "adaptive_alpha_sweep.json"),
    ] {
        let status = bin()
            .arg(command)
            .arg("--spec")
            .arg(spec(name))
            .output()
            .unwrap();
        assert_eq!(
            status.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&status.stderr)
        );
    }
    let lb = bin()
        .args(["lowerbound", "--spec"])
        .arg(spec("lowerbound.json"))
        .args(["--max-steps", "50", "--trials", "2"])
        .output()
        .unwrap();
    assert_eq!(lb.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&lb.stdout).unwrap();
    assert_eq!(summary["converged_fraction"], 0.0);
}
