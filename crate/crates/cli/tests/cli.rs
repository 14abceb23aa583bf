use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fairfict(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairfict"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const DATA: [&str; 4] = ["--data", "fx/fixture.csv", "--config", "fx/fixture.toml"];

fn with_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&fairfict(&["fixture", "--out", "fx"], dir.path()));
    dir
}

fn args<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(&DATA).chain(tail).copied().collect()
}

#[test]
fn fixture_audits_marginally_fair_but_subgroup_unfair() {
    let dir = with_fixture();
    let out = ok(&fairfict(
        &args(
            &["audit"],
            &["--model", "fx/gerrymander_model.txt", "--mode", "marginal"],
        ),
        dir.path(),
    ));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "marginal");
    assert_eq!(row[5], "0");

    let out = ok(&fairfict(
        &args(
            &["audit"],
            &[
                "--model",
                "fx/gerrymander_model.txt",
                "--mode",
                "exhaustive",
            ],
        ),
        dir.path(),
    ));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[5]), ("exhaustive", "0.0625"));
}

#[test]
fn train_with_full_slack_has_constant_error() {
    let dir = with_fixture();
    ok(&fairfict(
        &args(
            &["train"],
            &["--gamma", "1.0", "--iters", "10", "--out", "run"],
        ),
        dir.path(),
    ));
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    let eps: Vec<&str> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(eps.len(), 11);
    assert!(eps.iter().all(|e| *e == eps[0]));
    let model = fs::read_to_string(dir.path().join("run/model.txt")).unwrap();
    assert_eq!(model.lines().filter(|l| l.starts_with("h ")).count(), 11);
}

#[test]
fn frontier_of_a_single_point_is_that_point() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("trace_subgroup_gamma0.02.csv"),
        "t,eps_mix,gamma_mix,group_id,auditor_zero,eps_last\n0,0.25,0.0125,0,1,0.25\n",
    )
    .unwrap();
    let out = ok(&fairfict(
        &["frontier", "trace_subgroup_gamma0.02.csv"],
        dir.path(),
    ));
    assert_eq!(
        out,
        "eps,gamma,input_gamma,t,algo\n0.25,0.0125,0.02,0,subgroup\n"
    );
}

#[test]
fn frontier_pools_sweep_traces() {
    let dir = with_fixture();
    ok(&fairfict(
        &args(
            &["sweep"],
            &[
                "--gamma", "0", "--gamma", "0.05", "--iters", "5", "--out", "sw",
            ],
        ),
        dir.path(),
    ));
    let out = ok(&fairfict(
        &[
            "frontier",
            "sw/trace_subgroup_gamma0.csv",
            "sw/trace_subgroup_gamma0.05.csv",
            "--out",
            "f.csv",
        ],
        dir.path(),
    ));
    assert!(out.is_empty());
    let pooled = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert_eq!(
        pooled,
        fs::read_to_string(dir.path().join("sw/frontier_subgroup.csv")).unwrap()
    );
}

#[test]
fn surface_emits_one_grid_per_checkpoint() {
    let dir = with_fixture();
    ok(&fairfict(
        &args(&["train"], &["--iters", "4", "--out", "run"]),
        dir.path(),
    ));
    ok(&fairfict(
        &args(
            &["surface"],
            &["--model", "run/model.txt", "--every", "2", "--out", "s.csv"],
        ),
        dir.path(),
    ));
    let surface = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = surface.lines();
    assert_eq!(
        lines.next(),
        Some("t,theta1,theta2,signed_disparity,gamma_unfairness")
    );
    let ts: std::collections::BTreeSet<&str> =
        lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ts.into_iter().collect::<Vec<_>>(), vec!["0", "2", "4"]);
    assert_eq!(surface.lines().count(), 1 + 3 * 400);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        fairfict(&["train", "--bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(fairfict(&[], dir.path()).status.code(), Some(2));
    let missing = fairfict(
        &[
            "audit",
            "--data",
            "missing.csv",
            "--protected",
            "a",
            "--model",
            "m.txt",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.csv"));
    let bad_algo = fairfict(
        &[
            "sweep", "--data", "x.csv", "--gamma", "0", "--out", "o", "--algo", "other",
        ],
        dir.path(),
    );
    assert_eq!(bad_algo.status.code(), Some(2));
}
