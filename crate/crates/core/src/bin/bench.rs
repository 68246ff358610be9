//! Benchmark driver. Prints timing rows for the hanoi, jugs, and
//! intersection workloads as CSV or an aligned table, optionally writing
//! gnuplot data alongside. Exit codes: 0 success, 1 correctness or I/O
//! failure, 2 configuration error.

use clap::{Parser, Subcommand, ValueEnum};
use solstream::bench::{
    bench_hanoi, bench_intersection, bench_jugs, emit_csv, emit_gnuplot, emit_table, BenchError,
    BenchRow, IntersectCase,
};
use solstream::{Runtime, RuntimeConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Times parallel-search workloads against their sequential baselines",
    after_help = "The MAX_THREADS environment variable caps the runtime's thread slots."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for the timing rows.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the rows here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write gnuplot data blocks (ratio curves) to this file.
    #[arg(long, global = true, value_name = "PATH")]
    gnuplot: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Count Hanoi moves recursively, split over power-of-two thread counts.
    Hanoi {
        #[arg(long, default_value_t = 20)]
        rings: u32,
        /// Comma-separated thread counts, each a power of two.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        iters: u32,
    },
    /// Race hill-climbing, depth-first, and breadth-first jug searches.
    Jugs {
        /// Comma-separated target volumes for the 5- and 9-liter jugs.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "1,2,3,4,6,7,8,9,11,12,13,14"
        )]
        targets: Vec<i64>,
        #[arg(long, default_value_t = 25)]
        iters: u32,
    },
    /// Intersect member chains through a pipeline vs a sequential findall.
    Intersect {
        /// Chain lengths: a comma-separated list or an inclusive range like 2..16.
        #[arg(long, value_parser = parse_counts, default_value = "2..16")]
        sets: std::vec::Vec<usize>,
        /// Elements per set.
        #[arg(long, default_value_t = 100)]
        size: usize,
        /// best: identical sets; worst: disjoint sets.
        #[arg(long, default_value = "best")]
        case: IntersectCase,
        #[arg(long, default_value_t = 25)]
        iters: u32,
    },
}

fn parse_counts(s: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("{p}: {e}")))
        .collect()
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let rt = Runtime::with_config(RuntimeConfig::from_env());

    let rows = match &cli.command {
        Command::Hanoi {
            rings,
            threads,
            iters,
        } => bench_hanoi(&rt, *rings, threads, *iters),
        Command::Jugs { targets, iters } => bench_jugs(&rt, targets, *iters),
        Command::Intersect {
            sets,
            size,
            case,
            iters,
        } => bench_intersection(&rt, sets, *size, *case, *iters),
    };
    let rows = match rows {
        Ok(rows) => rows,
        Err(e @ BenchError::Config(_)) => {
            eprintln!("bench: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("bench: {e}");
            return ExitCode::from(1);
        }
    };

    match write_outputs(&cli, &rows) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(1)
        }
    }
}

fn write_outputs(cli: &Cli, rows: &[BenchRow]) -> std::io::Result<()> {
    let rendered = match cli.format {
        Format::Csv => emit_csv(rows),
        Format::Table => emit_table(rows),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    if let Some(path) = &cli.gnuplot {
        std::fs::write(path, emit_gnuplot(rows))?;
    }
    Ok(())
}
