//! End-to-end runs of the bench binary at tiny sizes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

fn run(args: &[&str]) -> Output {
    bench().args(args).output().expect("bench binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("solstream-cli-{}-{name}", std::process::id()))
}

#[test]
fn hanoi_csv_rows_recompute_their_ratio() {
    let out = run(&[
        "hanoi",
        "--rings",
        "6",
        "--threads",
        "1,2",
        "--iters",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("benchmark,params,threads,seconds,ratio,seconds_median,ref_seconds")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2, "one row per thread count: {text}");
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], "hanoi");
        assert_eq!(cols[1], "rings=6");
        let seconds: f64 = cols[3].parse().unwrap();
        let reference: f64 = cols[6].parse().unwrap();
        let recomputed = format!("{:.3}", reference / seconds);
        assert_eq!(recomputed, cols[4], "ratio must follow from the row");
    }
}

#[test]
fn jugs_table_lists_every_strategy_and_the_race() {
    let out = run(&["jugs", "--targets", "2", "--iters", "2"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout_of(&out);
    assert!(text.contains("benchmark"), "missing table header: {text}");
    assert!(text.contains("ratio"), "missing table header: {text}");
    for label in ["algo=hc", "algo=df", "algo=bf", "algo=cop"] {
        assert!(text.contains(label), "missing row {label}: {text}");
    }
}

#[test]
fn results_land_in_the_requested_files() {
    let csv_path = scratch("rows.csv");
    let plot_path = scratch("plot.dat");
    let out = run(&[
        "intersect",
        "--sets",
        "2",
        "--size",
        "10",
        "--case",
        "best",
        "--iters",
        "2",
        "--format",
        "csv",
        "--out",
        csv_path.to_str().unwrap(),
        "--gnuplot",
        plot_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert_eq!(stdout_of(&out), "", "results were redirected to the file");
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("benchmark,params,threads,"), "{csv}");
    assert!(
        csv.contains("intersect,sets=2;size=10;case=best,2,"),
        "{csv}"
    );
    let plot = fs::read_to_string(&plot_path).unwrap();
    assert!(plot.contains("speedup vs sets"), "{plot}");
    let _ = fs::remove_file(csv_path);
    let _ = fs::remove_file(plot_path);
}

#[test]
fn bad_invocations_exit_with_the_usage_code() {
    assert_eq!(run(&["hanoi", "--rings", "0"]).status.code(), Some(2));
    assert_eq!(run(&["hanoi", "--iters", "many"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-benchmark"]).status.code(), Some(2));
    assert_eq!(
        run(&["intersect", "--case", "sideways"]).status.code(),
        Some(2)
    );
}

#[test]
fn thread_cap_from_the_environment_is_enforced() {
    let refused = bench()
        .env("MAX_THREADS", "2")
        .args(["hanoi", "--rings", "5", "--threads", "1,4", "--iters", "1"])
        .output()
        .expect("bench binary runs");
    assert_eq!(refused.status.code(), Some(2), "{refused:?}");

    let allowed = bench()
        .env("MAX_THREADS", "2")
        .args(["hanoi", "--rings", "5", "--threads", "1,2", "--iters", "1"])
        .output()
        .expect("bench binary runs");
    assert_eq!(allowed.status.code(), Some(0), "{allowed:?}");
}
