//! Event CSV, parameter JSON and fit-report CSV formats.
//!
//! Events:
//!
//! ```text
//! # T=100.0
//! # M=4
//! time,mark
//! 0.25,0
//! 1.5,3
//! ```
//!
//! Both comment lines are optional. Without `# M=` the node count is the
//! largest mark plus one; without `# T=` the horizon is the last event time.
//! Floats are written in shortest round-trip form, so a write/read cycle is
//! lossless.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use hawkes_core::model::validate_sequence;
use hawkes_core::{EventSequence, FitReport, HawkesParams, ModelError, SequenceError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{}{}: {source}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Sequence {
        path: PathBuf,
        line: Option<u64>,
        source: SequenceError,
    },
    #[error("{}: {message}", path.display())]
    Params { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

impl FileError {
    fn io(path: &Path, source: io::Error) -> Self {
        FileError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        FileError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn read_events(path: &Path) -> Result<EventSequence, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_events(&text, path)
}

/// Parses event CSV text; `path` only labels diagnostics.
pub fn parse_events(text: &str, path: &Path) -> Result<EventSequence, FileError> {
    let mut horizon = None;
    let mut nodes = None;
    for (idx, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let comment = comment.trim();
        let line_no = idx as u64 + 1;
        if let Some(v) = comment.strip_prefix("T=") {
            let t: f64 = v.trim().parse().map_err(|_| FileError::parse(path, line_no, format!("invalid horizon `{}`", v.trim())))?;
            horizon = Some(t);
        } else if let Some(v) = comment.strip_prefix("M=") {
            let m: usize = v.trim().parse().map_err(|_| FileError::parse(path, line_no, format!("invalid node count `{}`", v.trim())))?;
            nodes = Some(m);
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| FileError::parse(path, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["time", "mark"] {
        let line = header.position().map_or(1, |p| p.line());
        return Err(FileError::parse(path, line, "expected header `time,mark`"));
    }
    let mut times = Vec::new();
    let mut marks = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            FileError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(FileError::parse(path, line, "expected two fields"));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| FileError::parse(path, line, format!("invalid time `{}`", &record[0])))?;
        let m: usize = record[1]
            .parse()
            .map_err(|_| FileError::parse(path, line, format!("invalid mark `{}`", &record[1])))?;
        times.push(t);
        marks.push(m);
        lines.push(line);
    }
    let num_nodes = match nodes {
        Some(m) => m,
        None => match marks.iter().max() {
            Some(&max) => max + 1,
            None => return Err(FileError::parse(path, 1, "empty event file needs a `# M=` line")),
        },
    };
    let horizon = match horizon.or_else(|| times.last().copied()) {
        Some(t) => t,
        None => return Err(FileError::parse(path, 1, "empty event file needs a `# T=` line")),
    };
    validate_sequence(times, marks, horizon, num_nodes).map_err(|source| {
        let line = match source {
            SequenceError::UnsortedTimes(i) | SequenceError::MarkOutOfRange(i) | SequenceError::NegativeTime(i) => {
                lines.get(i).copied()
            }
            _ => None,
        };
        FileError::Sequence {
            path: path.to_path_buf(),
            line,
            source,
        }
    })
}

pub fn format_events(seq: &EventSequence) -> String {
    let mut out = String::with_capacity(24 * seq.len() + 64);
    let _ = writeln!(out, "# T={}", format_f64(seq.horizon()));
    let _ = writeln!(out, "# M={}", seq.num_nodes());
    out.push_str("time,mark\n");
    for (t, m) in seq.times().iter().zip(seq.marks()) {
        let _ = writeln!(out, "{},{m}", format_f64(*t));
    }
    out
}

pub fn write_events(path: &Path, seq: &EventSequence) -> Result<(), FileError> {
    fs::write(path, format_events(seq)).map_err(|e| FileError::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    mu: Vec<f64>,
    gamma: Vec<f64>,
    /// `K` row-major `M × M` matrices.
    alpha: Vec<Vec<Vec<f64>>>,
}

pub fn params_to_json(params: &HawkesParams) -> String {
    let m = params.num_nodes();
    let file = ParamsFile {
        m,
        k: params.num_kernels(),
        mu: params.mu().to_vec(),
        gamma: params.gamma().to_vec(),
        alpha: (0..params.num_kernels())
            .map(|k| params.alpha_kernel(k).chunks(m).map(<[f64]>::to_vec).collect())
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("parameters serialize");
    s.push('\n');
    s
}

pub fn params_from_json(text: &str, path: &Path) -> Result<HawkesParams, FileError> {
    let file: ParamsFile = serde_json::from_str(text).map_err(|source| FileError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |message: String| FileError::Params {
        path: path.to_path_buf(),
        message,
    };
    if file.mu.len() != file.m {
        return Err(bad(format!("mu has {} entries, M = {}", file.mu.len(), file.m)));
    }
    if file.gamma.len() != file.k {
        return Err(bad(format!("gamma has {} entries, K = {}", file.gamma.len(), file.k)));
    }
    if file.alpha.len() != file.k {
        return Err(bad(format!("alpha has {} matrices, K = {}", file.alpha.len(), file.k)));
    }
    let mut flat = Vec::with_capacity(file.k * file.m * file.m);
    for (k, matrix) in file.alpha.iter().enumerate() {
        if matrix.len() != file.m {
            return Err(bad(format!("alpha[{k}] has {} rows, M = {}", matrix.len(), file.m)));
        }
        for (p, row) in matrix.iter().enumerate() {
            if row.len() != file.m {
                return Err(bad(format!("alpha[{k}][{p}] has {} entries, M = {}", row.len(), file.m)));
            }
            flat.extend_from_slice(row);
        }
    }
    HawkesParams::new(file.mu, flat, file.gamma).map_err(|e: ModelError| bad(e.to_string()))
}

pub fn read_params(path: &Path) -> Result<HawkesParams, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    params_from_json(&text, path)
}

pub fn write_params(path: &Path, params: &HawkesParams) -> Result<(), FileError> {
    fs::write(path, params_to_json(params)).map_err(|e| FileError::io(path, e))
}

/// `epoch,nll,loglik_per_event,grad_norm,seconds`, epochs numbered from 1.
/// With `timings = false` the seconds column is written as 0 so the file
/// depends only on the numerics.
pub fn format_fit_report(report: &FitReport, timings: bool) -> String {
    let mut out = String::from("epoch,nll,loglik_per_event,grad_norm,seconds\n");
    for e in 0..report.epochs_run {
        let secs = if timings { report.seconds[e] } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e + 1,
            format_f64(report.nll[e]),
            format_f64(report.loglik_per_event[e]),
            format_f64(report.grad_norm[e]),
            format_f64(secs)
        );
    }
    out
}

pub fn write_fit_report(path: &Path, report: &FitReport, timings: bool) -> Result<(), FileError> {
    fs::write(path, format_fit_report(report, timings)).map_err(|e| FileError::io(path, e))
}
