//! The `murmur` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or ingestion error,
//! 3 numeric diagnostic (missed zeros, accuracy, failed acceptance suite).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arith::{sieve_primes, ArithError};
use crate::elliptic::ap_vector;
use crate::explicit::{FormulaError, Truncation};
use crate::family::{
    build_elliptic_family, build_kronecker_family, build_odd_character_family, compute_family_zeros, geometric_grid,
    murmuration_series_dirichlet, murmuration_series_elliptic, uniform_bins, zero_density_of_lists, FamilyError,
    ZeroMap,
};
use crate::io::{emit_hist, emit_series, ingest_curves, ingest_zeros, persist_zeros, IoError};
use crate::lfunc::{EvalAccuracy, LfuncError, MAX_HEIGHT};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MURMUR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "murmur",
    version,
    about = "Explicit formulas and murmurations for curves and characters"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count (and optionally list) the primes below a limit.
    Sieve(SieveArgs),
    /// Traces of Frobenius for every curve in a file.
    Ap(ApArgs),
    /// Compute zeros of Dirichlet L-functions and write them as CSV.
    Zeros(ZerosArgs),
    /// Histogram of zero ordinates from a zeros file.
    Hist(HistArgs),
    /// Family-averaged explicit formula on a geometric x-grid.
    Murmurate(MurmurateArgs),
    /// Run acceptance suites (c1 ... c10, quick, all).
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SieveArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=1u64 << 32))]
    limit: u64,
    /// Write the primes, one per row, to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ApArgs {
    #[arg(long)]
    curves: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=10_000_000))]
    limit: u64,
    /// CSV output (`label,p,ap`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CharKind {
    Kronecker,
    Modprime,
}

#[derive(Debug, Args)]
struct CharacterSelection {
    /// Smallest discriminant (Kronecker families).
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<i64>,
    /// Largest discriminant (Kronecker families).
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<i64>,
    /// Prime modulus (odd families).
    #[arg(long)]
    modulus: Option<u64>,
    /// Number of odd characters, even.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ZerosArgs {
    #[arg(long, value_enum)]
    kind: CharKind,
    #[command(flatten)]
    select: CharacterSelection,
    #[arg(long, value_parser = parse_height)]
    height: f64,
    /// Initial scan step; defaults to 0.25 / log(q + 3).
    #[arg(long, value_parser = parse_positive)]
    grid_step: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HistArgs {
    #[arg(long)]
    zeros: PathBuf,
    #[arg(long, value_parser = parse_positive)]
    bin_width: f64,
    #[arg(long, value_parser = parse_positive)]
    gamma_max: f64,
    /// Divide counts by the number of objects.
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SeriesKind {
    Ec,
    Kronecker,
    Odd,
}

#[derive(Debug, Args)]
struct MurmurateArgs {
    #[arg(long, value_enum)]
    kind: SeriesKind,
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    conductor_lo: u64,
    #[arg(long, default_value_t = u64::MAX)]
    conductor_hi: u64,
    #[arg(long, default_value_t = 0)]
    rank: u32,
    #[command(flatten)]
    select: CharacterSelection,
    /// Ingested zeros; required for curves.
    #[arg(long, conflicts_with = "height")]
    zeros: Option<PathBuf>,
    /// Compute character zeros up to this height instead of reading them.
    #[arg(long, value_parser = parse_height)]
    height: Option<f64>,
    /// `all`, `count:N` or `height:T`.
    #[arg(long, default_value = "all")]
    trunc: Truncation,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(2..=1_000_000))]
    grid: u64,
    #[arg(long, default_value_t = 10_000.0, value_parser = parse_xmax)]
    xmax: f64,
    /// Move R(x) into the gold curve (even characters only).
    #[arg(long)]
    include_r: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// c1 ... c10, quick or all.
    #[arg(default_value = "all")]
    suite: String,
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_height(s: &str) -> Result<f64, String> {
    let v = parse_positive(s)?;
    if v > MAX_HEIGHT {
        return Err(format!("height {v} exceeds the supported {MAX_HEIGHT}"));
    }
    Ok(v)
}

fn parse_xmax(s: &str) -> Result<f64, String> {
    let v = parse_positive(s)?;
    if !(v > 2.0 && v < 4e9) {
        return Err(format!("xmax must lie in (2, 4e9), got {v}"));
    }
    Ok(v)
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<ArithError> for CliError {
    fn from(e: ArithError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<LfuncError> for CliError {
    fn from(e: LfuncError) -> Self {
        match e {
            LfuncError::Domain(_) | LfuncError::OutOfRange(_) | LfuncError::BadAccuracy(_) => {
                CliError::usage(e.to_string())
            }
            _ => CliError::numeric(e.to_string()),
        }
    }
}

impl From<FormulaError> for CliError {
    fn from(e: FormulaError) -> Self {
        match e {
            FormulaError::Lfunc(inner) => inner.into(),
            FormulaError::LabelMismatch { .. } => CliError::data(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Lfunc(inner) => inner.into(),
            FamilyError::Formula(inner) => inner.into(),
            FamilyError::MissingZeros { .. } | FamilyError::Coverage { .. } | FamilyError::Empty(_) => {
                CliError::data(e.to_string())
            }
            FamilyError::NotReal(_) => CliError::numeric(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

/// Sets the global rayon pool size from [`THREADS_ENV`] when present.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool that is already built (tests, repeated calls) keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |e: std::io::Error| CliError::data(e.to_string());
    match command {
        Command::Sieve(a) => {
            let primes = sieve_primes(a.limit)?;
            if let Some(path) = &a.out {
                let mut text = String::from("p\n");
                for p in primes.primes() {
                    text.push_str(&format!("{p}\n"));
                }
                write_text(path, &text)?;
            }
            writeln!(out, "{} primes below {}", primes.len(), a.limit).map_err(w)?;
        }
        Command::Ap(a) => {
            let corpus = ingest_curves(&a.curves)?;
            for warning in &corpus.warnings {
                eprintln!("warning: {warning}");
            }
            let mut text = String::from("label,p,ap\n");
            for e in &corpus.curves {
                let values = ap_vector(e, a.limit).map_err(|e| CliError::data(e.to_string()))?;
                for (p, v) in values {
                    text.push_str(&format!("{},{p},{v}\n", e.label()));
                }
            }
            match &a.out {
                Some(path) => {
                    write_text(path, &text)?;
                    writeln!(out, "traces for {} curves below {}", corpus.curves.len(), a.limit).map_err(w)?;
                }
                None => write!(out, "{text}").map_err(w)?,
            }
        }
        Command::Zeros(a) => {
            let family = match a.kind {
                CharKind::Kronecker => {
                    let (lo, hi) = discriminant_range(&a.select)?;
                    build_kronecker_family(lo, hi)?
                }
                CharKind::Modprime => {
                    let (q, count) = odd_selection(&a.select)?;
                    build_odd_character_family(q, count, a.select.seed)?
                }
            };
            let zeros = compute_family_zeros(&family, a.height, &EvalAccuracy::default(), a.grid_step)?;
            for (id, list) in &zeros {
                for (lo, hi) in &list.flagged {
                    eprintln!("warning: {id}: sign change near the central point in [{lo:e}, {hi:e}] not reported");
                }
            }
            persist_zeros(&zeros, &a.out)?;
            let total: usize = zeros.values().map(|z| z.len()).sum();
            writeln!(
                out,
                "{total} zeros for {} L-functions up to height {}",
                zeros.len(),
                a.height
            )
            .map_err(w)?;
        }
        Command::Hist(a) => {
            let zeros = ingest_zeros(&a.zeros)?;
            let lists: Vec<_> = zeros.values().collect();
            let edges = uniform_bins(a.bin_width, a.gamma_max)?;
            let id = a
                .zeros
                .file_stem()
                .map_or("zeros".into(), |s| s.to_string_lossy().into_owned());
            let hist = zero_density_of_lists(&id, &lists, &edges, a.normalize)?;
            emit_hist(&hist, &a.out)?;
            writeln!(out, "{} bins from {} objects", hist.bin_count(), lists.len()).map_err(w)?;
        }
        Command::Murmurate(a) => murmurate(a, out)?,
        Command::Verify(a) => {
            let passed = crate::verify::run_suite(&a.suite, out).map_err(CliError::usage)?;
            if !passed {
                return Err(CliError::numeric(format!("suite {} has failing criteria", a.suite)));
            }
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn discriminant_range(s: &CharacterSelection) -> Result<(i64, i64), CliError> {
    match (s.lo, s.hi) {
        (Some(lo), Some(hi)) if lo <= hi => Ok((lo, hi)),
        (Some(lo), Some(hi)) => Err(CliError::usage(format!("--lo {lo} exceeds --hi {hi}"))),
        _ => Err(CliError::usage("Kronecker families need --lo and --hi")),
    }
}

fn odd_selection(s: &CharacterSelection) -> Result<(u64, usize), CliError> {
    match (s.modulus, s.count) {
        (Some(q), Some(count)) => Ok((q, count)),
        _ => Err(CliError::usage("odd families need --modulus and --count")),
    }
}

fn murmurate(a: MurmurateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let limit = a.xmax.floor() as u64 + 1;
    let primes = sieve_primes(limit)?;
    let grid = geometric_grid(2.0, a.xmax, a.grid as usize)?;
    let acc = EvalAccuracy::default();
    let series = match a.kind {
        SeriesKind::Ec => {
            let curves = a
                .curves
                .as_ref()
                .ok_or_else(|| CliError::usage("--kind ec needs --curves"))?;
            let zeros = a
                .zeros
                .as_ref()
                .ok_or_else(|| CliError::usage("--kind ec needs --zeros"))?;
            if a.include_r {
                return Err(CliError::usage("--include-r applies to characters only"));
            }
            let corpus = ingest_curves(curves)?;
            let family = build_elliptic_family(&corpus.curves, a.conductor_lo, a.conductor_hi, a.rank)?;
            murmuration_series_elliptic(&family, &ingest_zeros(zeros)?, &grid, a.trunc, &primes)?
        }
        SeriesKind::Kronecker | SeriesKind::Odd => {
            let family = if matches!(a.kind, SeriesKind::Kronecker) {
                let (lo, hi) = discriminant_range(&a.select)?;
                build_kronecker_family(lo, hi)?
            } else {
                let (q, count) = odd_selection(&a.select)?;
                build_odd_character_family(q, count, a.select.seed)?
            };
            let zeros: ZeroMap = match (&a.zeros, a.height) {
                (Some(path), _) => ingest_zeros(path)?,
                (None, Some(t)) => compute_family_zeros(&family, t, &acc, None)?,
                (None, None) => return Err(CliError::usage("character families need --zeros or --height")),
            };
            murmuration_series_dirichlet(&family, &zeros, &grid, a.trunc, a.include_r, &primes, &acc)?
        }
    };
    emit_series(&series, &a.out)?;
    writeln!(
        out,
        "{} points for {} members of {}",
        series.len(),
        series.metadata.member_count,
        series.metadata.family_id
    )
    .map_err(|e| CliError::data(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("murmur").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["sieve"]).0, EXIT_USAGE);
        assert_eq!(call(&["sieve", "--limit", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["sieve", "--limit", "abc"]).0, EXIT_USAGE);
        assert_eq!(
            call(&[
                "hist",
                "--zeros",
                "z",
                "--bin-width",
                "-1",
                "--gamma-max",
                "3",
                "--out",
                "o"
            ])
            .0,
            EXIT_USAGE
        );
        let (code, _, err) = call(&["zeros", "--kind", "kronecker", "--height", "10", "--out", "o"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--lo"));
        assert_eq!(
            call(&[
                "zeros",
                "--kind",
                "kronecker",
                "--lo",
                "1",
                "--hi",
                "5",
                "--height",
                "900",
                "--out",
                "o"
            ])
            .0,
            EXIT_USAGE
        );
        assert_eq!(call(&["murmurate", "--kind", "ec", "--out", "o"]).0, EXIT_USAGE);
        assert_eq!(
            call(&["murmurate", "--kind", "odd", "--trunc", "depth:3", "--out", "o"]).0,
            EXIT_USAGE
        );
        assert_eq!(call(&["verify", "nope"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_and_version_exit_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("murmurate"));
        assert_eq!(call(&["--version"]).0, 0);
    }

    #[test]
    fn sieve_reports_count() {
        let (code, out, _) = call(&["sieve", "--limit", "1000000"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "78498 primes below 1000000");
    }

    #[test]
    fn missing_files_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.csv");
        let m = missing.to_str().unwrap();
        assert_eq!(call(&["ap", "--curves", m, "--limit", "100"]).0, EXIT_DATA);
        let o = dir.path().join("o.csv");
        assert_eq!(
            call(&[
                "hist",
                "--zeros",
                m,
                "--bin-width",
                "0.1",
                "--gamma-max",
                "3",
                "--out",
                o.to_str().unwrap()
            ])
            .0,
            EXIT_DATA
        );
    }

    #[test]
    fn ap_to_stdout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "label,a1,a2,a3,a4,a6,conductor,rank\n11a1,0,-1,1,-10,-20,11,0\n").unwrap();
        let (code, out, _) = call(&["ap", "--curves", path.to_str().unwrap(), "--limit", "12"]);
        assert_eq!(code, 0);
        assert_eq!(
            out,
            "label,p,ap\n11a1,2,-2\n11a1,3,-1\n11a1,5,1\n11a1,7,-2\n11a1,11,1\n"
        );
    }

    #[test]
    fn zeros_and_murmurate_kronecker() {
        let dir = tempfile::tempdir().unwrap();
        let z = dir.path().join("z.csv");
        let s = dir.path().join("s.csv");
        let (code, out, err) = call(&[
            "zeros",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "8",
            "--height",
            "20",
            "--out",
            z.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("2 L-functions"));
        let text = std::fs::read_to_string(&z).unwrap();
        assert!(text.starts_with("object_id,gamma\nkron5,"));
        let first: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert!((first - 6.648_453_344_727_715).abs() < 1e-6, "{first}");
        let (code, _, err) = call(&[
            "murmurate",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "8",
            "--zeros",
            z.to_str().unwrap(),
            "--grid",
            "50",
            "--xmax",
            "500",
            "--include-r",
            "--out",
            s.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let series = std::fs::read_to_string(&s).unwrap();
        assert_eq!(series.lines().count(), 51);
        assert!(series.starts_with("x,avg_lhs,avg_zero_term,black\n2,"));
        // the zeros file lacks kron12
        let (code, _, _) = call(&[
            "murmurate",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "12",
            "--zeros",
            z.to_str().unwrap(),
            "--out",
            s.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_DATA);
        let (code, _, _) = call(&[
            "murmurate",
            "--kind",
            "kronecker",
            "--lo",
            "-4",
            "--hi",
            "-3",
            "--height",
            "10",
            "--include-r",
            "--out",
            s.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn missed_zeros_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let z = dir.path().join("z.csv");
        let (code, _, err) = call(&[
            "zeros",
            "--kind",
            "kronecker",
            "--lo",
            "5",
            "--hi",
            "5",
            "--height",
            "200",
            "--grid-step",
            "100",
            "--out",
            z.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_NUMERIC, "{err}");
        assert!(err.contains("refine"));
    }
}
