use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sidewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sidewalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_small(out: &Path) -> Output {
    sidewalk(&[
        "run",
        "--scenario",
        "different_sides",
        "--trials",
        "2",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn run_writes_summary_traces_and_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_small(dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("different_sides"));
    for f in ["summary.txt", "switch_histogram.csv", "effective_config.toml"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    for seed in [5, 6] {
        let stem = format!("different_sides_{seed}");
        assert!(dir.path().join("traces").join(format!("{stem}.csv")).is_file());
        assert!(dir.path().join("traces").join(format!("{stem}.json")).is_file());
    }
    let effective = fs::read_to_string(dir.path().join("effective_config.toml")).unwrap();
    assert!(effective.contains("trials = 2"));
    assert!(effective.contains("rho"));
}

#[test]
fn effective_config_reruns_to_the_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(&dir.path().join("a")).status.success());
    let cfg = dir.path().join("a").join("effective_config.toml");
    let b = dir.path().join("b");
    let o = sidewalk(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--no-traces"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read_to_string(dir.path().join("a").join("summary.txt")).unwrap();
    let second = fs::read_to_string(b.join("summary.txt")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: [&[&str]; 4] = [
        &["run", "--scenario", "moonwalk", "--out", out],
        &["run", "--scenario", "symmetric", "--set", "no_such_key=1", "--out", out],
        &["run", "--scenario", "symmetric", "--set", "beta=-1", "--out", out],
        &["run", "--scenario", "symmetric", "--set", "beta", "--out", out],
    ];
    for args in cases {
        let o = sidewalk(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn replay_matches_the_stored_record() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path()).status.success());
    let trace = dir.path().join("traces").join("different_sides_5.csv");
    let o = sidewalk(&["replay", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("salsa=no"), "{text}");
    assert!(text.contains("matches"), "{text}");
}

fn switch_total(line: &str) -> usize {
    line.split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .filter(|(k, _)| k.starts_with("switches_"))
        .map(|(_, v)| v.parse::<usize>().unwrap())
        .sum()
}

#[test]
fn replay_prefixes_never_lose_switches() {
    let dir = tempfile::tempdir().unwrap();
    let o = sidewalk(&[
        "run",
        "--scenario",
        "different_belief_bias",
        "--trials",
        "1",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let trace = dir.path().join("traces").join("different_belief_bias_3.csv");
    let rows = fs::read_to_string(&trace).unwrap().lines().count() - 1;
    let mut last = 0;
    for up_to in (0..=rows).step_by(10) {
        let o = sidewalk(&["replay", trace.to_str().unwrap(), "--up-to", &up_to.to_string()]);
        assert!(o.status.success());
        let total = switch_total(&stdout(&o));
        assert!(total >= last, "switch count fell at step {up_to}");
        last = total;
    }
}

#[test]
fn truncated_trace_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path()).status.success());
    let trace = dir.path().join("traces").join("different_sides_5.csv");
    let text = fs::read_to_string(&trace).unwrap();
    let cut = dir.path().join("cut.csv");
    fs::write(&cut, &text[..text.len() * 2 / 3]).unwrap();
    let o = sidewalk(&["replay", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_trace_is_an_environment_error() {
    let o = sidewalk(&["replay", "/nonexistent/trace.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
