//! CSV ingestion of curves and zeros, and CSV emission of zeros, series and
//! histograms.
//!
//! | file      | header                              |
//! |-----------|-------------------------------------|
//! | curves    | `label,a1,a2,a3,a4,a6,conductor,rank` |
//! | zeros     | `object_id,gamma`                   |
//! | series    | `x,avg_lhs,avg_zero_term,black`     |
//! | histogram | `bin_lo,bin_hi,count`               |
//!
//! Zeros are written with 9 decimal places; every other float with 9
//! significant digits in the style of C's `%.9g`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::elliptic::{EllipticCurve, EllipticError};
use crate::family::{MurmurationSeries, ZeroDensityHistogram, ZeroMap, REALITY_TOLERANCE};
use crate::lfunc::ZeroList;

pub const CURVE_HEADER: [&str; 8] = ["label", "a1", "a2", "a3", "a4", "a6", "conductor", "rank"];
pub const ZERO_HEADER: [&str; 2] = ["object_id", "gamma"];
pub const SERIES_HEADER: [&str; 4] = ["x", "avg_lhs", "avg_zero_term", "black"];
pub const HIST_HEADER: [&str; 3] = ["bin_lo", "bin_hi", "count"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: curve {label}: {source}")]
    Invalid {
        line: u64,
        label: String,
        source: EllipticError,
    },
    #[error("line {line}: duplicate label {label}")]
    Duplicate { line: u64, label: String },
    #[error("cannot write non-real series value {0}")]
    NotReal(String),
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

/// Curves in file order, plus diagnostics for conductors that do not fit
/// the discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveCorpus {
    pub curves: Vec<EllipticCurve>,
    pub warnings: Vec<String>,
}

fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn records(text: &str, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut header_seen = false;
    for result in reader.records() {
        let record = result.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !header_seen {
            if record.iter().collect::<Vec<_>>() != header {
                return Err(IoError::Parse {
                    line,
                    message: format!("expected header {:?}", header.join(",")),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != header.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push((line, record));
    }
    if !header_seen {
        return Err(IoError::Parse {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    record[i].parse::<T>().map_err(|e| IoError::Parse {
        line,
        message: format!("{name} = {:?}: {e}", &record[i]),
    })
}

/// Parses curve CSV text; see [`ingest_curves`].
pub fn parse_curves(text: &str) -> Result<CurveCorpus, IoError> {
    let mut curves = Vec::new();
    let mut warnings = Vec::new();
    let mut labels = HashSet::new();
    for (line, r) in records(text, &CURVE_HEADER)? {
        let label = r[0].to_string();
        if label.is_empty() {
            return Err(IoError::Parse {
                line,
                message: "empty label".into(),
            });
        }
        let mut ainvs = [0i64; 5];
        for (i, a) in ainvs.iter_mut().enumerate() {
            *a = field(&r, i + 1, CURVE_HEADER[i + 1], line)?;
        }
        let conductor: u64 = field(&r, 6, "conductor", line)?;
        let rank: u32 = field(&r, 7, "rank", line)?;
        if !labels.insert(label.clone()) {
            return Err(IoError::Duplicate { line, label });
        }
        let curve = EllipticCurve::new(label.clone(), ainvs, conductor, rank).map_err(|source| IoError::Invalid {
            line,
            label: label.clone(),
            source,
        })?;
        let bad = curve.conductor_mismatches();
        if !bad.is_empty() {
            warnings.push(format!(
                "line {line}: curve {label}: conductor {conductor} has primes {bad:?} not dividing the discriminant"
            ));
        }
        curves.push(curve);
    }
    Ok(CurveCorpus { curves, warnings })
}

/// Reads a curve file; rejects bad rows, singular models and duplicate labels.
pub fn ingest_curves(path: &Path) -> Result<CurveCorpus, IoError> {
    parse_curves(&read_file(path)?)
}

/// Parses zero CSV text; see [`ingest_zeros`].
pub fn parse_zeros(text: &str) -> Result<ZeroMap, IoError> {
    let mut grouped: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for (line, r) in records(text, &ZERO_HEADER)? {
        let id = r[0].to_string();
        if id.is_empty() {
            return Err(IoError::Parse {
                line,
                message: "empty object_id".into(),
            });
        }
        let gamma: f64 = field(&r, 1, "gamma", line)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(IoError::Parse {
                line,
                message: format!("gamma {gamma} is not a positive real"),
            });
        }
        let list = grouped.entry(id.clone()).or_default();
        if let Some(&prev) = list.last() {
            if gamma <= prev {
                return Err(IoError::Parse {
                    line,
                    message: format!("{id}: gamma {gamma} does not exceed the previous {prev}"),
                });
            }
        }
        list.push(gamma);
    }
    grouped
        .into_iter()
        .map(|(id, gammas)| {
            let list = ZeroList::ingested(id.clone(), gammas).map_err(|message| IoError::Parse { line: 0, message })?;
            Ok((id, list))
        })
        .collect()
}

/// Reads a zeros file; rows of one object must be strictly increasing.
pub fn ingest_zeros(path: &Path) -> Result<ZeroMap, IoError> {
    parse_zeros(&read_file(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), IoError> {
    w.flush().map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Rows sorted by object id, then ordinate, at 9 decimal places.
pub fn write_zeros<W: Write>(zeros: &ZeroMap, mut out: W) -> Result<(), IoError> {
    writeln!(out, "{}", ZERO_HEADER.join(","))?;
    for (id, list) in zeros {
        for g in &list.gammas {
            writeln!(out, "{id},{g:.9}")?;
        }
    }
    Ok(())
}

pub fn persist_zeros(zeros: &ZeroMap, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_zeros(zeros, &mut w)?;
    finish(w, path)
}

/// Real parts of the three columns; fails if any value is not real.
pub fn write_series<W: Write>(series: &MurmurationSeries, mut out: W) -> Result<(), IoError> {
    writeln!(out, "{}", SERIES_HEADER.join(","))?;
    for i in 0..series.len() {
        let cols = [series.avg_lhs[i], series.avg_zero_term[i], series.black[i]];
        if let Some(z) = cols.iter().find(|z| z.im.abs() > REALITY_TOLERANCE * (1.0 + z.norm())) {
            return Err(IoError::NotReal(format!("{z} at x = {}", series.x_grid[i])));
        }
        writeln!(
            out,
            "{},{},{},{}",
            format_g9(series.x_grid[i]),
            format_g9(cols[0].re),
            format_g9(cols[1].re),
            format_g9(cols[2].re)
        )?;
    }
    Ok(())
}

pub fn emit_series(series: &MurmurationSeries, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_series(series, &mut w)?;
    finish(w, path)
}

pub fn write_hist<W: Write>(hist: &ZeroDensityHistogram, mut out: W) -> Result<(), IoError> {
    writeln!(out, "{}", HIST_HEADER.join(","))?;
    for (w, c) in hist.bin_edges.windows(2).zip(&hist.counts) {
        writeln!(out, "{},{},{}", format_g9(w[0]), format_g9(w[1]), format_g9(*c))?;
    }
    Ok(())
}

pub fn emit_hist(hist: &ZeroDensityHistogram, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    write_hist(hist, &mut w)?;
    finish(w, path)
}

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 <= |v| < 1e9`.
pub fn format_g9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
