use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn gridcascade() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gridcascade"));
    c.env_remove("GRIDCASCADE_OUT");
    c
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn zero_hours_writes_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(gridcascade().args(["--hours", "0", "--out"]).arg(dir.path()));
    assert_eq!(read(dir.path(), "paths.jsonl"), "");
    assert_eq!(read(dir.path(), "shedding.csv").lines().count(), 1);
    assert!(read(dir.path(), "path_graph.dot").starts_with("digraph"));
    assert!(dir.path().join("timing.txt").exists());
    assert!(dir.path().join("lsd_stats.json").exists());
}

#[test]
fn acceleration_flags_do_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let common = ["--case", "rts79_wind", "--hours", "60", "--epsilon", "1e-9", "--m", "3"];
    run_ok(gridcascade().args(common).arg("--out").arg(a.path()));
    run_ok(gridcascade().args(common).args(["--no-lsd", "--no-woodbury", "--out"]).arg(b.path()));
    for f in ["paths.jsonl", "shedding.csv", "path_graph.dot"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
    assert_eq!(read(a.path(), "paths.jsonl").lines().count(), 180);
    assert!(read(a.path(), "timing.txt").contains("(c3)"));
    assert!(read(b.path(), "timing.txt").contains("(c1)"));
}

#[test]
fn graph_degrees_match_the_path_file() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(gridcascade().args(["--case", "rts79_wind", "--hours", "24", "--out"]).arg(dir.path()));
    let mut expected: BTreeMap<String, usize> = BTreeMap::new();
    for line in read(dir.path(), "paths.jsonl").lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let mut seq = vec!["start".to_string()];
        for e in v["events"].as_array().unwrap() {
            for el in e["elements"].as_array().unwrap() {
                seq.push(el.as_str().unwrap().to_string());
            }
        }
        for w in seq.windows(2) {
            *expected.entry(w[0].clone()).or_default() += 1;
            *expected.entry(w[1].clone()).or_default() += 1;
        }
    }
    let dot = read(dir.path(), "path_graph.dot");
    let mut found = BTreeMap::new();
    for line in dot.lines().filter(|l| l.contains("degree=")) {
        let name = line.trim().split('"').nth(1).unwrap().to_string();
        let deg: usize = line.split("degree=").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        found.insert(name, deg);
    }
    assert_eq!(found, expected);
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(&cfg, "case = \"five_bus\"\nhours = 3\nepsilon = 1e-6\nm = 2\nout = \"unused\"\n").unwrap();
    let env_out = dir.path().join("from-env");
    run_ok(gridcascade().arg("--config").arg(&cfg).env("GRIDCASCADE_OUT", &env_out));
    assert_eq!(read(&env_out, "paths.jsonl").lines().count(), 6);

    let flag_out = dir.path().join("from-flag");
    run_ok(gridcascade().arg("--config").arg(&cfg).arg("--out").arg(&flag_out).env("GRIDCASCADE_OUT", &env_out));
    assert!(flag_out.join("paths.jsonl").exists());

    let printed = run_ok(gridcascade().arg("--config").arg(&cfg).args(["--m", "4", "--print-config"]));
    assert!(printed.contains("m = 4"));
    assert!(printed.contains("case = \"five_bus\""));
}

#[test]
fn bad_input_exits_nonzero() {
    for args in [
        vec!["--case", "no_such_case"],
        vec!["--epsilon", "0"],
        vec!["--m", "0"],
        vec!["--config", "/nonexistent/study.toml"],
    ] {
        let out = gridcascade().args(&args).args(["--hours", "1"]).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn scenarios_replay_gives_same_paths() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_ok(gridcascade().args(["--hours", "12", "--save-scenarios", "--out"]).arg(a.path()));
    let csv = a.path().join("scenarios.csv");
    run_ok(gridcascade().args(["--hours", "12", "--scenarios"]).arg(&csv).arg("--out").arg(b.path()));
    assert_eq!(read(a.path(), "paths.jsonl"), read(b.path(), "paths.jsonl"));
}

#[test]
fn compare_writes_a_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_ok(gridcascade().args(["--case", "rts79", "--hours", "10", "--compare", "--out"]).arg(dir.path()));
    for label in ["c1", "c2", "c3", "ref-c1"] {
        assert!(table.lines().any(|l| l.starts_with(label)), "{label}");
    }
    assert!(dir.path().join("timing_comparison.txt").exists());
}
