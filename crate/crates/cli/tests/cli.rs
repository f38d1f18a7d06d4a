use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sqd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqd"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn sqd")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulate_small(dir: &Path, name: &str, n: &str) {
    ok(&sqd(&["simulate", "--n", n, "--seed", "7", "--out", name], dir));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "a", "3");
    simulate_small(tmp.path(), "b", "3");
    ok(&sqd(&["simulate", "--n", "3", "--seed", "8", "--out", "c"], tmp.path()));
    let a = fs::read(tmp.path().join("a/corpus.sqd")).unwrap();
    let b = fs::read(tmp.path().join("b/corpus.sqd")).unwrap();
    let c = fs::read(tmp.path().join("c/corpus.sqd")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seeds"]["scenario"], 7);
    assert_eq!(manifest["config"]["simulate"]["n"], 3);
}

#[test]
fn idle_only_climb_gives_an_empty_session() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("idle.txt"), "seed = 4\nphase = idle 30 0\n").unwrap();
    ok(&sqd(&["simulate", "--scenario", "idle.txt", "--n", "1", "--out", "sim"], tmp.path()));
    let text = fs::read_to_string(tmp.path().join("sim/corpus.sqd")).unwrap();
    assert_eq!(text.matches("\nsession,").count(), 1);
    assert!(text.contains("meta,packets,0"));

    ok(&sqd(&["extract", "sim/corpus.sqd", "--out", "ex"], tmp.path()));
    let durations = fs::read_to_string(tmp.path().join("ex/durations.csv")).unwrap();
    assert_eq!(durations.lines().nth(1), Some("climb-000,0,0,0.000,,"));
    ok(&sqd(&["evaluate", "sim/corpus.sqd", "--lengths", "45", "--out", "ev"], tmp.path()));
    let sweep = fs::read_to_string(tmp.path().join("ev/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1);
}

#[test]
fn extract_resamples_every_climb_to_the_target_length() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim", "4");
    ok(&sqd(&["extract", "sim/corpus.sqd", "--out", "ex"], tmp.path()));
    let ex = tmp.path().join("ex");
    assert_eq!(fs::read_to_string(ex.join("hist_length_post.csv")).unwrap(), "bin_lo,bin_hi,count\n360,361,4\n");
    for stem in ["hist_length_pre", "hist_lowering_pre", "hist_lowering_post"] {
        assert!(ex.join(format!("{stem}.csv")).is_file());
        assert!(fs::read_to_string(ex.join(format!("{stem}.svg"))).unwrap().starts_with("<svg"));
    }
    let traces: Vec<_> = fs::read_dir(ex.join("orientation")).unwrap().collect();
    assert_eq!(traces.len(), 8);
    let trace = fs::read_to_string(ex.join("orientation/climb-000.csv")).unwrap();
    assert!(trace.starts_with("t_ms,theta_yx,theta_yz,theta_xz,activity,lowering_signature\n"));

    // 8 windows of 45 per climb with overlap 2
    let features = fs::read_to_string(ex.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 1 + 4 * 8);
    assert!(ex.join("manifest.json").is_file());
}

#[test]
fn empty_corpus_is_not_an_error() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(sqd(&["simulate", "--n", "0"], tmp.path()).status.code(), Some(2));
    fs::write(tmp.path().join("empty.sqd"), "sqd-corpus,1,{}\n").unwrap();
    ok(&sqd(&["extract", "empty.sqd", "--out", "ex"], tmp.path()));
    let features = fs::read_to_string(tmp.path().join("ex/features.csv")).unwrap();
    assert_eq!(features.lines().count(), 1);
}

#[test]
fn evaluate_and_report_write_their_outputs() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim", "12");
    let out = sqd(
        &["evaluate", "sim/corpus.sqd", "--lengths", "30,45", "--folds", "3", "--repetitions", "1", "--out", "ev"],
        tmp.path(),
    );
    ok(&out);
    let ev = tmp.path().join("ev");
    for f in ["metrics.csv", "sweep.csv", "table.txt", "sweep.svg", "manifest.json"] {
        assert!(ev.join(f).is_file(), "missing {f}");
    }
    let sweep = fs::read_to_string(ev.join("sweep.csv")).unwrap();
    let lengths: Vec<&str> = sweep.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lengths, ["30", "45"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), fs::read_to_string(ev.join("table.txt")).unwrap());

    ok(&sqd(&["report", "ev", "--out", "rep"], tmp.path()));
    let md = fs::read_to_string(tmp.path().join("rep/report.md")).unwrap();
    assert!(md.contains("Best window length"));
    assert!(md.contains("| 45 |"));
    assert!(tmp.path().join("rep/sweep.svg").is_file());
}

#[test]
fn evaluate_accepts_an_extracted_feature_table() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim", "12");
    ok(&sqd(&["extract", "sim/corpus.sqd", "--window-len", "30", "--out", "ex"], tmp.path()));
    ok(&sqd(
        &["evaluate", "ex/features.csv", "--window-len", "30", "--folds", "3", "--repetitions", "1", "--out", "ev"],
        tmp.path(),
    ));
    let sweep = fs::read_to_string(tmp.path().join("ev/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);
    assert!(sweep.lines().nth(1).unwrap().starts_with("30,"));
}

#[test]
fn window_longer_than_a_climb_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    simulate_small(tmp.path(), "sim", "2");
    let out = sqd(&["evaluate", "sim/corpus.sqd", "--lengths", "400", "--out", "ev"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("400"), "{}", stderr(&out));

    let out = sqd(&["evaluate", "sim/corpus.sqd", "--lengths", "2", "--out", "ev"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_status_2() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[tree]\nmax_dept = 3\n").unwrap();
    fs::write(tmp.path().join("junk.sqd"), "not a corpus\n").unwrap();
    fs::write(tmp.path().join("scenario.txt"), "phase = flying 3 1\n").unwrap();

    let cases: [&[&str]; 5] = [
        &["--config", "bad.toml", "simulate", "--n", "1"],
        &["extract", "junk.sqd"],
        &["extract", "missing.sqd"],
        &["simulate", "--scenario", "scenario.txt"],
        &["report", "nowhere"],
    ];
    for args in cases {
        let out = sqd(args, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error: "), "{args:?}: {}", stderr(&out));
    }
    assert!(stderr(&sqd(cases[0], tmp.path())).contains("max_dept"));
}
