//! Command-line front end: `cluster`, `gen`, `verify` and `bench`.

pub mod datasets;
pub mod io;

use crate::oracle::{compare_dendrograms, naive_hac, ORACLE_MAX_POINTS};
use crate::{run, Dendrogram, Error, Linkage, PointSet, Result, RunOptions};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Tolerance on cophenetic heights used by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "chainhac",
    version,
    about = "Parallel hierarchical agglomerative clustering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    /// Uniform in [0, √n]^d.
    Uniform,
    /// Five Gaussian blobs (std √n/6) with 10% uniform background in [0, 5√n]^d.
    Gaussian,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a point file and write the dendrogram rows.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        /// Dendrogram output; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_parser = parse_linkage)]
        linkage: Linkage,
        /// Cache entries per cluster (default 64 for avg1, 0 otherwise).
        #[arg(long)]
        cache_size: Option<usize>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        threads: Option<u32>,
        /// Write the run statistics report here.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Generate a synthetic point file.
    Gen {
        #[arg(long, value_enum)]
        kind: DataKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the engine (or a dendrogram file) against brute-force clustering.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_linkage)]
        linkage: Linkage,
        #[arg(long)]
        cache_size: Option<usize>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        threads: Option<u32>,
        /// Check this dendrogram file instead of running the engine.
        #[arg(long)]
        dendrogram: Option<PathBuf>,
    },
    /// Time runs over a grid of sizes, linkages, cache sizes and threads.
    Bench {
        #[arg(long, value_enum, default_value = "uniform")]
        kind: DataKind,
        /// Comma-separated point counts.
        #[arg(long, default_value = "10000")]
        n: String,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        /// Comma-separated linkages.
        #[arg(long, default_value = "ward")]
        linkage: String,
        /// Comma-separated cache sizes; linkage default when omitted.
        #[arg(long)]
        cache_size: Option<String>,
        /// Comma-separated thread counts.
        #[arg(long, default_value = "1")]
        threads: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Runs per cell; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        runs: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_linkage(s: &str) -> std::result::Result<Linkage, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| Error::invalid(format!("bad {what} '{t}': {e}")))
        })
        .collect()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

/// Runs one command, writing normal output to `out`.
pub fn execute(command: Command, out: &mut dyn std::io::Write) -> Result<i32> {
    match command {
        Command::Cluster {
            input,
            output,
            linkage,
            cache_size,
            threads,
            stats,
        } => {
            let points = io::read_points(&input)?;
            let opts = options(linkage, cache_size, threads);
            let result = run(&points, &opts)?;
            emit(output.as_deref(), &result.dendrogram.to_text(), out)?;
            if let Some(path) = stats {
                io::write_text(&path, &result.stats.report())?;
            }
            Ok(EXIT_OK)
        }
        Command::Gen {
            kind,
            n,
            dims,
            seed,
            output,
        } => {
            let points = generate(kind, n, dims, seed)?;
            emit(output.as_deref(), &io::format_points(&points), out)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            input,
            linkage,
            cache_size,
            threads,
            dendrogram,
        } => {
            let points = io::read_points(&input)?;
            let report = verify(&points, linkage, cache_size, threads, dendrogram.as_deref())?;
            write_out(out, &report.text)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Bench {
            kind,
            n,
            dims,
            linkage,
            cache_size,
            threads,
            seed,
            runs,
            output,
        } => {
            let grid = BenchGrid {
                kind,
                sizes: parse_list(&n, "point count")?,
                dims,
                linkages: parse_list(&linkage, "linkage")?,
                cache_sizes: cache_size
                    .as_deref()
                    .map(|s| parse_list(s, "cache size"))
                    .transpose()?,
                threads: parse_list(&threads, "thread count")?,
                seed,
                runs: runs.max(1),
            };
            if grid.threads.contains(&0) {
                return Err(Error::invalid("thread counts must be at least 1"));
            }
            let rows = bench(&grid)?;
            emit(output.as_deref(), &format_bench(&rows), out)?;
            Ok(EXIT_OK)
        }
    }
}

fn options(linkage: Linkage, cache_size: Option<usize>, threads: Option<u32>) -> RunOptions {
    let mut opts = RunOptions::new(linkage);
    if let Some(s) = cache_size {
        opts = opts.cache_size(s);
    }
    if let Some(t) = threads {
        opts = opts.threads(t as usize);
    }
    opts
}

pub fn generate(kind: DataKind, n: usize, dims: usize, seed: u64) -> Result<PointSet> {
    match kind {
        DataKind::Uniform => datasets::gen_uniform(n, dims, seed),
        DataKind::Gaussian => datasets::gen_gaussian_disc(n, dims, seed),
    }
}

fn write_out(out: &mut dyn std::io::Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn std::io::Write) -> Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => write_out(out, text),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub passed: bool,
    pub max_relative_deviation: f64,
    pub text: String,
}

/// Checks the engine's dendrogram, or the one in `dendrogram_file`, against
/// brute-force clustering by cophenetic matrix.
pub fn verify(
    points: &PointSet,
    linkage: Linkage,
    cache_size: Option<usize>,
    threads: Option<u32>,
    dendrogram_file: Option<&Path>,
) -> Result<VerifyReport> {
    let n = points.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::Refused(format!(
            "{n} points is too many for brute-force verification (limit {ORACLE_MAX_POINTS}); \
             verify a subsample instead"
        )));
    }
    let candidate = match dendrogram_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let d = Dendrogram::parse(&text)?;
            if d.n_leaves() != n {
                return Err(Error::invalid(format!(
                    "dendrogram has {} leaves but the input has {n} points",
                    d.n_leaves()
                )));
            }
            d
        }
        None => run(points, &options(linkage, cache_size, threads))?.dendrogram,
    };
    let reference = naive_hac(points, linkage)?;
    let cmp = compare_dendrograms(&candidate, &reference, VERIFY_TOLERANCE)?;
    let mut text = String::new();
    let _ = writeln!(text, "n {n}");
    let _ = writeln!(text, "linkage {linkage}");
    let _ = writeln!(
        text,
        "max_relative_deviation {:e}",
        cmp.max_relative_deviation
    );
    let _ = writeln!(text, "tolerance {:e}", cmp.tolerance);
    if let Some((p, q, a, b)) = cmp.first_mismatch {
        let _ = writeln!(text, "first_mismatch {p} {q} {a} {b}");
    }
    let _ = writeln!(
        text,
        "result {}",
        if cmp.passed() { "PASS" } else { "FAIL" }
    );
    Ok(VerifyReport {
        passed: cmp.passed(),
        max_relative_deviation: cmp.max_relative_deviation,
        text,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub kind: DataKind,
    pub sizes: Vec<usize>,
    pub dims: usize,
    pub linkages: Vec<Linkage>,
    /// `None` uses each linkage's default.
    pub cache_sizes: Option<Vec<usize>>,
    pub threads: Vec<usize>,
    pub seed: u64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub linkage: Linkage,
    pub cache_size: usize,
    pub threads: usize,
    pub seconds: f64,
    /// Time at the grid's first thread count divided by this row's time.
    pub speedup: f64,
    pub rounds: usize,
    pub hash: String,
}

/// Short SHA-256 digest of a dendrogram's text form.
pub fn dendrogram_hash(d: &Dendrogram) -> String {
    let digest = Sha256::digest(d.to_text().as_bytes());
    hex::encode(&digest[..8])
}

pub fn bench(grid: &BenchGrid) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &grid.sizes {
        let points = generate(grid.kind, n, grid.dims, grid.seed)?;
        for &linkage in &grid.linkages {
            let caches = grid
                .cache_sizes
                .clone()
                .unwrap_or_else(|| vec![linkage.default_cache_size()]);
            for &s in &caches {
                let mut base = None;
                for &t in &grid.threads {
                    let opts = RunOptions::new(linkage).cache_size(s).threads(t);
                    let mut best = f64::INFINITY;
                    let mut last = None;
                    for _ in 0..grid.runs {
                        let start = Instant::now();
                        let out = run(&points, &opts)?;
                        best = best.min(start.elapsed().as_secs_f64());
                        last = Some(out);
                    }
                    let out = last.expect("at least one run");
                    let base_time = *base.get_or_insert(best);
                    rows.push(BenchRow {
                        n,
                        linkage,
                        cache_size: s,
                        threads: t,
                        seconds: best,
                        speedup: base_time / best,
                        rounds: out.stats.round_count(),
                        hash: dendrogram_hash(&out.dendrogram),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut s = String::from("n linkage cache threads seconds speedup rounds hash\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{} {} {} {} {:.6} {:.3} {} {}",
            r.n, r.linkage, r.cache_size, r.threads, r.seconds, r.speedup, r.rounds, r.hash
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("1, 8", "x").unwrap(), vec![1, 8]);
        assert!(parse_list::<usize>("", "x").unwrap().is_empty());
        assert!(parse_list::<usize>("1,a", "x").is_err());
        assert_eq!(
            parse_list::<Linkage>("ward,avg2", "x").unwrap(),
            vec![Linkage::Ward, Linkage::Avg2]
        );
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let grid = BenchGrid {
            kind: DataKind::Uniform,
            sizes: vec![],
            dims: 2,
            linkages: vec![Linkage::Ward],
            cache_sizes: None,
            threads: vec![1],
            seed: 1,
            runs: 1,
        };
        let rows = bench(&grid).unwrap();
        assert!(rows.is_empty());
        assert_eq!(format_bench(&rows).lines().count(), 1);
    }

    #[test]
    fn bench_speedup_is_relative_to_first_thread_count() {
        let grid = BenchGrid {
            kind: DataKind::Uniform,
            sizes: vec![500],
            dims: 2,
            linkages: vec![Linkage::Ward],
            cache_sizes: None,
            threads: vec![1, 2],
            seed: 4,
            runs: 1,
        };
        let rows = bench(&grid).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].speedup, 1.0);
        assert!((rows[1].speedup - rows[0].seconds / rows[1].seconds).abs() < 1e-12);
        assert_eq!(rows[0].hash, rows[1].hash);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["chainhac", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["chainhac", "cluster", "--linkage", "single", "--input", "x"]),
            EXIT_USAGE
        );
        assert_eq!(main_with_args(["chainhac", "--help"]), EXIT_OK);
    }
}
