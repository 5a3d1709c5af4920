use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablematch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn match_weighted_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    std::fs::write(
        &path,
        r#"{"vertices": ["a", "b", "c"], "weights": [["a", "b", 1], ["a", "c", 2], ["b", "c", "inf"]]}"#,
    )
    .unwrap();
    let text = stdout(&run(&["match", path.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["pairs"][0][0], "a");
    assert_eq!(v["pairs"][0][1], "b");
    assert_eq!(v["unmatched"], serde_json::json!(["c"]));
    assert_eq!(v["stable"], true);
}

#[test]
fn match_positions_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let dump = dir.path().join("points.csv");
    std::fs::write(
        &path,
        r#"{"vertices": ["r0", "b0", "r1"], "colors": [0, 1, 0], "rule": "asymmetric_two_type", "positions": [[0.0], [1.0], [5.0]]}"#,
    )
    .unwrap();
    stdout(&run(&[
        "match",
        path.to_str().unwrap(),
        "--points",
        dump.to_str().unwrap(),
    ]));
    let csv = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,x0,color,partner,distance");
    assert_eq!(lines[1], "0,0,0,1,1");
    assert_eq!(lines[3], "2,5,0,-1,inf");
}

#[test]
fn pwit_csv_columns() {
    let text = stdout(&run(&[
        "pwit", "--model", "asym", "--eps", "0.25", "--T", "1", "--reps", "500", "--seed", "3",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,T,color,estimate,se,censored_fraction");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("asym,1,b,"));
    // same seed, same bytes
    let again = stdout(&run(&[
        "pwit", "--model", "asym", "--eps", "0.25", "--T", "1", "--reps", "500", "--seed", "3",
    ]));
    assert_eq!(text, again);
}

#[test]
fn ode_one_type_grid() {
    let text = stdout(&run(&[
        "ode", "--model", "one", "--tmax", "1", "--step", "0.5",
    ]));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!((r[1] - 1.0 / (1.0 + r[0])).abs() < 1e-8);
    }
}

#[test]
fn hier_exact_header_and_levels() {
    let text = stdout(&run(&[
        "hier",
        "exact",
        "--lambda",
        "1",
        "--eps",
        "0.3",
        "--base-depth",
        "20",
        "--levels",
        "4",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "k,beta_lo,beta_hi,gamma_lo,gamma_hi,delta_lo,delta_hi,EN_lo"
    );
    let ks: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ks, ["0", "1", "2", "3", "4"]);
}

#[test]
fn hier_mc_histogram() {
    let text = stdout(&run(&[
        "hier", "mc", "--K", "4", "--reps", "50", "--seed", "1",
    ]));
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 50);
}

#[test]
fn figures_are_written() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&run(&["figures", "--out", dir.path().to_str().unwrap()]));
    for f in [
        "scatter_2000_1000.svg",
        "scatter_2500_500.svg",
        "trajectory_eps_0.25.csv",
    ] {
        assert!(Path::new(&dir.path().join(f)).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("trajectory_eps_0.25.csv")).unwrap();
    assert!(csv.starts_with("t,r,b\n0,0.75,0.25\n"));
}

#[test]
fn gated_failure_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // an absurdly tight sigma makes a Monte Carlo check fail
    std::fs::write(
        &cfg,
        r#"{"sigma": 1e-9, "experiment": {"kind": "cross_validate", "model": "asymmetric", "eps": 0.25, "t_max": 2.0, "replicates": 1000}}"#,
    )
    .unwrap();
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(
        &cfg,
        r#"{"experiment": {"kind": "cross_validate", "model": "asymmetric", "eps": 0.25, "t_max": 2.0, "replicates": 1000}}"#,
    )
    .unwrap();
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_arguments_are_errors() {
    let out = run(&["ode", "--model", "asym"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["pwit", "--model", "sym", "--probs", "0.5,0.2", "--T", "1"]);
    assert!(!out.status.success());
}
