//! Benchmark harness for the three workloads the combinators were built
//! around: recursive Hanoi move counting split across threads, the water
//! jug race between three search strategies, and pipelined set
//! intersection. Workloads are timed on the monotonic clock, every timed
//! configuration is correctness-checked in the same run, and rows carry
//! enough raw data to recompute their own ratios.

use crate::combinators::{concurrent_and, first_solution};
use crate::goal::{CancelToken, Goal};
use crate::pipeline::{piped_findall, seq_findall};
use crate::puzzles::{plan_from_term, replay_plan, JugStrategy};
use crate::runtime::{Runtime, RuntimeError};
use crate::term::{AnswerProjection, Bindings, Term};
use std::fmt;
use std::time::Instant;

/// Jug sizes all jug benchmarks run against.
pub const JUG_CAPACITIES: [i64; 2] = [5, 9];

/// Column header of the CSV emitter, also accepted by [`parse_csv`].
pub const CSV_HEADER: &str = "benchmark,params,threads,seconds,ratio,seconds_median,ref_seconds";

/// One timed configuration. `seconds` is the mean over iterations,
/// `seconds_median` the median, and `ratio` relates `seconds` to
/// `ref_seconds`: speedup (`ref_seconds / seconds`) for hanoi and
/// intersect, slowdown (`seconds / ref_seconds`) for jugs.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub benchmark: String,
    pub params: String,
    pub threads: usize,
    pub seconds: f64,
    pub ratio: f64,
    pub seconds_median: f64,
    pub ref_seconds: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("correctness: {0}")]
    Correctness(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

fn config(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

fn wrong(msg: impl Into<String>) -> BenchError {
    BenchError::Correctness(msg.into())
}

/// Times the recursive Hanoi move count for each thread count, decomposing
/// the top of the recursion into `threads` equal subtrees run through
/// [`concurrent_and`]. Thread counts must be powers of two no larger than
/// `2^rings`. The speedup base is the smallest thread count in the list.
pub fn bench_hanoi(
    rt: &Runtime,
    rings: u32,
    thread_counts: &[usize],
    iters: u32,
) -> Result<Vec<BenchRow>, BenchError> {
    if rings == 0 || rings > 40 {
        return Err(config(format!("rings must be in 1..=40, got {rings}")));
    }
    if thread_counts.is_empty() {
        return Err(config("no thread counts given"));
    }
    if iters == 0 {
        return Err(config("iters must be at least 1"));
    }
    for &tc in thread_counts {
        if tc == 0 || !tc.is_power_of_two() {
            return Err(config(format!(
                "thread count {tc} is not a power of two (the recursion splits in halves)"
            )));
        }
        if tc.trailing_zeros() > rings {
            return Err(config(format!(
                "{tc} threads would split deeper than {rings} rings allow"
            )));
        }
        if tc > rt.config().max_threads {
            return Err(config(format!(
                "{tc} threads exceed the runtime limit of {}",
                rt.config().max_threads
            )));
        }
    }

    let expected = (1u64 << rings) - 1;
    let mut timed = Vec::with_capacity(thread_counts.len());
    for &tc in thread_counts {
        let mut samples = Vec::with_capacity(iters as usize);
        for _ in 0..iters {
            let started = Instant::now();
            let moves = hanoi_split(rt, rings, tc)?;
            let elapsed = started.elapsed().as_secs_f64();
            if moves != expected {
                return Err(wrong(format!(
                    "hanoi({rings}) across {tc} threads counted {moves} moves, expected {expected}"
                )));
            }
            samples.push(elapsed);
        }
        timed.push((tc, mean_median(&mut samples)));
    }

    let base = timed
        .iter()
        .min_by_key(|(tc, _)| *tc)
        .map(|(_, (mean, _))| *mean)
        .unwrap();
    Ok(timed
        .into_iter()
        .map(|(tc, (mean, median))| BenchRow {
            benchmark: "hanoi".into(),
            params: format!("rings={rings}"),
            threads: tc,
            seconds: mean,
            ratio: base / mean,
            seconds_median: median,
            ref_seconds: base,
        })
        .collect())
}

fn hanoi_split(rt: &Runtime, rings: u32, threads: usize) -> Result<u64, BenchError> {
    let depth = threads.trailing_zeros();
    let goal = Goal::hanoi_moves(rings - depth);
    let goals = vec![goal; threads];
    let projections = vec![AnswerProjection::new(Term::var(0)); threads];
    let counts = concurrent_and(rt, &projections, &goals)?
        .ok_or_else(|| wrong("a hanoi subtree produced no move count"))?;
    let mut total = threads as u64 - 1;
    for t in counts {
        match t {
            Term::Int(n) if n >= 0 => total += n as u64,
            other => return Err(wrong(format!("hanoi subtree answered {other}"))),
        }
    }
    Ok(total)
}

/// Times each search strategy alone and all three racing under
/// [`first_solution`] for every target, against the 5- and 9-liter jugs.
/// Every plan is replayed on the move simulator before its timing counts;
/// an unreachable target is reported as a row, with all four
/// configurations required to agree that no plan exists.
pub fn bench_jugs(rt: &Runtime, targets: &[i64], iters: u32) -> Result<Vec<BenchRow>, BenchError> {
    if targets.is_empty() {
        return Err(config("no targets given"));
    }
    if iters == 0 {
        return Err(config("iters must be at least 1"));
    }
    if let Some(bad) = targets.iter().find(|&&t| t < 0) {
        return Err(config(format!("target {bad} is negative")));
    }

    const ALGOS: [(JugStrategy, &str); 3] = [
        (JugStrategy::HillClimbing, "hc"),
        (JugStrategy::DepthFirst, "df"),
        (JugStrategy::BreadthFirst, "bf"),
    ];
    let mut rows = Vec::new();
    for &target in targets {
        let mut solved = Vec::new();
        let mut timed = Vec::new();
        for (strategy, label) in ALGOS {
            let mut samples = Vec::with_capacity(iters as usize);
            let mut found = false;
            for _ in 0..iters {
                let (elapsed, plan) = jug_single(target, strategy)?;
                found = match plan {
                    Some(t) => {
                        check_plan(target, &t)?;
                        true
                    }
                    None => false,
                };
                samples.push(elapsed);
            }
            solved.push((label, found));
            timed.push((label, 1, mean_median(&mut samples)));
        }

        let mut samples = Vec::with_capacity(iters as usize);
        let goals: Vec<Goal> = ALGOS
            .iter()
            .map(|(s, _)| Goal::jug_search(JUG_CAPACITIES.to_vec(), target, *s))
            .collect();
        let projection = AnswerProjection::new(Term::var(0));
        let mut found = false;
        for _ in 0..iters {
            let started = Instant::now();
            let winner = first_solution(rt, &projection, &goals)?;
            let elapsed = started.elapsed().as_secs_f64();
            found = match winner {
                Some(t) => {
                    check_plan(target, &t)?;
                    true
                }
                None => false,
            };
            samples.push(elapsed);
        }
        solved.push(("cop", found));
        timed.push(("cop", ALGOS.len(), mean_median(&mut samples)));

        if solved.iter().any(|(_, f)| *f != solved[0].1) {
            return Err(wrong(format!(
                "target {target}: configurations disagree on reachability: {solved:?}"
            )));
        }

        let fastest = timed
            .iter()
            .take(ALGOS.len())
            .map(|(_, _, (mean, _))| *mean)
            .fold(f64::INFINITY, f64::min);
        for (label, threads, (mean, median)) in timed {
            rows.push(BenchRow {
                benchmark: "jugs".into(),
                params: format!("target={target};algo={label}"),
                threads,
                seconds: mean,
                ratio: mean / fastest,
                seconds_median: median,
                ref_seconds: fastest,
            });
        }
    }
    Ok(rows)
}

fn jug_single(target: i64, strategy: JugStrategy) -> Result<(f64, Option<Term>), BenchError> {
    let goal = Goal::jug_search(JUG_CAPACITIES.to_vec(), target, strategy);
    let started = Instant::now();
    let first = goal
        .solutions(Bindings::new(1), CancelToken::new())
        .next()
        .transpose()
        .map_err(|e| wrong(format!("jug search failed: {e}")))?;
    let elapsed = started.elapsed().as_secs_f64();
    Ok((elapsed, first.map(|b| b.get(0).cloned().unwrap())))
}

fn check_plan(target: i64, plan: &Term) -> Result<(), BenchError> {
    let moves = plan_from_term(plan).map_err(BenchError::Correctness)?;
    replay_plan(&JUG_CAPACITIES, target, &moves).map_err(BenchError::Correctness)
}

/// Which intersection workload to build: every chain member the same set
/// (each stage multiplies useful work) or pairwise disjoint sets (the
/// second stage already filters everything out).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum IntersectCase {
    Best,
    Worst,
}

impl fmt::Display for IntersectCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntersectCase::Best => "best",
            IntersectCase::Worst => "worst",
        })
    }
}

impl std::str::FromStr for IntersectCase {
    type Err = String;

    fn from_str(s: &str) -> Result<IntersectCase, String> {
        match s {
            "best" => Ok(IntersectCase::Best),
            "worst" => Ok(IntersectCase::Worst),
            other => Err(format!("expected best or worst, got {other}")),
        }
    }
}

/// Times pipelined set intersection against its sequential oracle for each
/// chain length. Equality of the two result lists is checked every
/// iteration before the timing counts. Rows report the pipeline time with
/// the sequential time as reference, so ratio > 1 means the pipe won.
pub fn bench_intersection(
    rt: &Runtime,
    set_counts: &[usize],
    size: usize,
    case: IntersectCase,
    iters: u32,
) -> Result<Vec<BenchRow>, BenchError> {
    if set_counts.is_empty() {
        return Err(config("no set counts given"));
    }
    if iters == 0 {
        return Err(config("iters must be at least 1"));
    }
    for &n in set_counts {
        if n == 0 {
            return Err(config("a chain needs at least one set"));
        }
        if n > rt.config().max_threads {
            return Err(config(format!(
                "{n} sets exceed the runtime limit of {} stage threads",
                rt.config().max_threads
            )));
        }
    }

    let projection = AnswerProjection::new(Term::var(0));
    let mut rows = Vec::with_capacity(set_counts.len());
    for &n in set_counts {
        let goals: Vec<Goal> = (0..n)
            .map(|i| {
                let offset = match case {
                    IntersectCase::Best => 0,
                    IntersectCase::Worst => i * size,
                };
                let items = (0..size).map(|v| Term::int((offset + v) as i64)).collect();
                Goal::member(0, Term::list(items))
            })
            .collect();
        let expected = seq_findall(&projection, &goals, 1)
            .map_err(|e| wrong(format!("sequential oracle failed: {e}")))?;
        let plausible = match case {
            IntersectCase::Best => expected.len() == size,
            IntersectCase::Worst => expected.is_empty() || n == 1,
        };
        if !plausible {
            return Err(wrong(format!(
                "{case}-case chain of {n} sets yielded {} results",
                expected.len()
            )));
        }

        let mut seq_samples = Vec::with_capacity(iters as usize);
        let mut pipe_samples = Vec::with_capacity(iters as usize);
        for _ in 0..iters {
            let started = Instant::now();
            let seq = seq_findall(&projection, &goals, 1)
                .map_err(|e| wrong(format!("sequential run failed: {e}")))?;
            seq_samples.push(started.elapsed().as_secs_f64());

            let started = Instant::now();
            let piped = piped_findall(rt, &projection, &goals, 1)?;
            pipe_samples.push(started.elapsed().as_secs_f64());

            if seq != expected || piped != expected {
                return Err(wrong(format!(
                    "{case}-case chain of {n} sets: pipeline and sequential results diverged"
                )));
            }
        }
        let (seq_mean, _) = mean_median(&mut seq_samples);
        let (mean, median) = mean_median(&mut pipe_samples);
        rows.push(BenchRow {
            benchmark: "intersect".into(),
            params: format!("sets={n};size={size};case={case}"),
            threads: n,
            seconds: mean,
            ratio: seq_mean / mean,
            seconds_median: median,
            ref_seconds: seq_mean,
        });
    }
    Ok(rows)
}

fn mean_median(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(|a, b| a.total_cmp(b));
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mid = samples.len() / 2;
    let median = if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2.0
    };
    (mean, median)
}

/// Renders rows as CSV under [`CSV_HEADER`]. Seconds carry nanosecond
/// resolution so ratios stay recomputable from the emitted text.
pub fn emit_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.9},{:.3},{:.9},{:.9}\n",
            r.benchmark, r.params, r.threads, r.seconds, r.ratio, r.seconds_median, r.ref_seconds
        ));
    }
    out
}

/// Parses text produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(format!(
                "line {}: expected 7 fields, got {}",
                i + 2,
                fields.len()
            ));
        }
        let num = |j: usize| -> Result<f64, String> {
            fields[j]
                .parse()
                .map_err(|e| format!("line {}: field {}: {e}", i + 2, j + 1))
        };
        rows.push(BenchRow {
            benchmark: fields[0].to_string(),
            params: fields[1].to_string(),
            threads: fields[2]
                .parse()
                .map_err(|e| format!("line {}: threads: {e}", i + 2))?,
            seconds: num(3)?,
            ratio: num(4)?,
            seconds_median: num(5)?,
            ref_seconds: num(6)?,
        });
    }
    Ok(rows)
}

/// Renders rows as an aligned text table.
pub fn emit_table(rows: &[BenchRow]) -> String {
    let headers = [
        "benchmark",
        "params",
        "threads",
        "seconds",
        "ratio",
        "median",
        "reference",
    ];
    let mut cells: Vec<[String; 7]> = Vec::with_capacity(rows.len());
    for r in rows {
        cells.push([
            r.benchmark.clone(),
            r.params.clone(),
            r.threads.to_string(),
            format!("{:.6}", r.seconds),
            format!("{:.3}", r.ratio),
            format!("{:.6}", r.seconds_median),
            format!("{:.6}", r.ref_seconds),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let render = |out: &mut String, row: &[String]| {
        for (i, (cell, w)) in row.iter().zip(&widths).enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i < 2 {
                out.push_str(&format!("{cell:<w$}"));
            } else {
                out.push_str(&format!("{cell:>w$}"));
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    render(&mut out, &header_cells);
    for row in &cells {
        render(&mut out, row);
    }
    out
}

/// Renders hanoi and intersect rows as gnuplot data blocks (ratio against
/// the threads column, one block per parameter set, blank-line separated).
/// Jug rows have no figure shape and are skipped.
pub fn emit_gnuplot(rows: &[BenchRow]) -> String {
    let mut blocks: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    for r in rows {
        let key = match r.benchmark.as_str() {
            "hanoi" => format!("hanoi {} speedup vs threads", r.params),
            "intersect" => {
                let residual = r
                    .params
                    .split(';')
                    .filter(|p| !p.starts_with("sets="))
                    .collect::<Vec<_>>()
                    .join(";");
                format!("intersect {residual} speedup vs sets")
            }
            _ => continue,
        };
        match blocks.iter_mut().find(|(k, _)| *k == key) {
            Some((_, points)) => points.push((r.threads, r.ratio)),
            None => blocks.push((key, vec![(r.threads, r.ratio)])),
        }
    }
    let mut out = String::new();
    for (i, (key, points)) in blocks.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {key}\n"));
        for (x, y) in points {
            out.push_str(&format!("{x} {y:.3}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 5e-4
    }

    #[test]
    fn hanoi_base_row_is_exactly_one() {
        let rt = Runtime::new();
        let rows = bench_hanoi(&rt, 6, &[1, 2, 4], 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].threads, 1);
        assert_eq!(rows[0].ratio, 1.0);
        for r in &rows {
            assert!(close(r.ratio, r.ref_seconds / r.seconds));
            assert_eq!(r.params, "rings=6");
        }
        assert_eq!(rt.live_threads(), 0);
    }

    #[test]
    fn hanoi_rejects_odd_thread_counts() {
        let rt = Runtime::new();
        assert!(matches!(
            bench_hanoi(&rt, 6, &[3], 1),
            Err(BenchError::Config(_))
        ));
        assert!(matches!(
            bench_hanoi(&rt, 2, &[8], 1),
            Err(BenchError::Config(_))
        ));
        assert!(matches!(
            bench_hanoi(&rt, 0, &[1], 1),
            Err(BenchError::Config(_))
        ));
    }

    #[test]
    fn jug_rows_are_slowdowns_against_the_fastest() {
        let rt = Runtime::new();
        let rows = bench_jugs(&rt, &[4], 2).unwrap();
        assert_eq!(rows.len(), 4);
        let labels: Vec<&str> = rows
            .iter()
            .map(|r| r.params.rsplit('=').next().unwrap())
            .collect();
        assert_eq!(labels, vec!["hc", "df", "bf", "cop"]);
        assert!(rows.iter().take(3).any(|r| r.ratio == 1.0));
        for r in &rows {
            assert!(r.ratio >= 1.0);
            assert!(close(r.ratio, r.seconds / r.ref_seconds));
        }
        assert_eq!(rows[3].threads, 3);
        assert_eq!(rt.live_threads(), 0);
        assert_eq!(rt.live_hubs(), 0);
    }

    #[test]
    fn unreachable_target_reports_rows_instead_of_failing() {
        let rt = Runtime::new();
        let rows = bench_jugs(&rt, &[15], 1).unwrap();
        assert_eq!(rows.len(), 4);
    }

    #[test]
    fn intersection_best_case_is_checked_against_the_oracle() {
        let rt = Runtime::new();
        let rows = bench_intersection(&rt, &[2, 4], 5, IntersectCase::Best, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].threads, 2);
        assert_eq!(rows[1].threads, 4);
        for r in &rows {
            assert!(close(r.ratio, r.ref_seconds / r.seconds));
        }
    }

    #[test]
    fn intersection_worst_case_runs_empty() {
        let rt = Runtime::new();
        let rows = bench_intersection(&rt, &[3], 4, IntersectCase::Worst, 2).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].params, "sets=3;size=4;case=worst");
    }

    #[test]
    fn csv_round_trips_and_ratios_recompute() {
        let rt = Runtime::new();
        let mut rows = bench_hanoi(&rt, 5, &[1, 2], 1).unwrap();
        rows.extend(bench_jugs(&rt, &[2], 1).unwrap());
        rows.extend(bench_intersection(&rt, &[2], 3, IntersectCase::Best, 1).unwrap());
        let text = emit_csv(&rows);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for r in &parsed {
            let speedup = r.ref_seconds / r.seconds;
            let slowdown = r.seconds / r.ref_seconds;
            assert!(
                close(r.ratio, speedup) || close(r.ratio, slowdown),
                "ratio {} not recomputable from {} and {}",
                r.ratio,
                r.seconds,
                r.ref_seconds
            );
        }
        assert_eq!(emit_csv(&parsed), text);
    }

    #[test]
    fn empty_row_set_emits_a_bare_header() {
        assert_eq!(emit_csv(&[]), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&emit_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn table_lines_align() {
        let rows = vec![
            BenchRow {
                benchmark: "hanoi".into(),
                params: "rings=20".into(),
                threads: 1,
                seconds: 0.5,
                ratio: 1.0,
                seconds_median: 0.5,
                ref_seconds: 0.5,
            },
            BenchRow {
                benchmark: "intersect".into(),
                params: "sets=4;size=100;case=best".into(),
                threads: 4,
                seconds: 0.25,
                ratio: 2.0,
                seconds_median: 0.25,
                ref_seconds: 0.5,
            },
        ];
        let table = emit_table(&rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("benchmark"));
        let col = lines[0].find("threads").unwrap();
        for line in &lines[1..] {
            assert!(line.len() > col);
        }
    }

    #[test]
    fn gnuplot_blocks_skip_jug_rows() {
        let rt = Runtime::new();
        let mut rows = bench_hanoi(&rt, 5, &[1, 2], 1).unwrap();
        rows.extend(bench_jugs(&rt, &[2], 1).unwrap());
        let plot = emit_gnuplot(&rows);
        assert!(plot.starts_with("# hanoi rings=5 speedup vs threads\n"));
        assert!(!plot.contains("jugs"));
        assert_eq!(plot.lines().filter(|l| !l.is_empty()).count(), 3);
    }

    #[test]
    fn mean_median_handles_even_and_odd_counts() {
        assert_eq!(mean_median(&mut [3.0, 1.0, 2.0]), (2.0, 2.0));
        let (mean, median) = mean_median(&mut [4.0, 1.0, 2.0, 3.0]);
        assert_eq!(mean, 2.5);
        assert_eq!(median, 2.5);
    }
}
