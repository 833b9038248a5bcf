//! CSV emission and parsing of [`MetricsRecord`] tables.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::experiment::MetricsRecord;

/// CSV header line.
pub const HEADER: &str = "ecc,explorations_total,mse_h,mse_x,crlb_ref,trials";

/// Error writing or reading a CSV file, with the path.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    /// IO failure.
    #[error("{path}: {source}")]
    Io {
        /// File path.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Malformed content.
    #[error("line {line}: {message}")]
    Malformed {
        /// 1-based line number.
        line: usize,
        /// What is wrong.
        message: String,
    },
}

/// Formats a real with 12 significant digits; NaN becomes `nan`.
#[must_use]
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{v:.11e}")
    }
}

/// Renders records as CSV text with LF line endings.
#[must_use]
pub fn to_csv_string(records: &[MetricsRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.ecc,
            r.explorations_total,
            format_real(r.mse_h),
            format_real(r.mse_x),
            format_real(r.crlb_ref),
            r.trials
        );
    }
    s
}

/// Writes records to `path`.
///
/// # Errors
/// [`CsvError::Io`] carrying the path.
pub fn emit_csv(records: &[MetricsRecord], path: &Path) -> Result<(), CsvError> {
    let io = |source| CsvError::Io { path: path.to_owned(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(to_csv_string(records).as_bytes()).map_err(io)?;
    f.flush().map_err(io)
}

/// Parses CSV text produced by [`to_csv_string`].
///
/// # Errors
/// [`CsvError::Malformed`] with the offending line.
pub fn parse_csv(text: &str) -> Result<Vec<MetricsRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(CsvError::Malformed { line: 1, message: format!("expected header `{HEADER}`") }),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let bad = |message: String| CsvError::Malformed { line: i + 1, message };
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", f.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
            let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            Ok(MetricsRecord {
                ecc: int(f[0])?,
                explorations_total: int(f[1])?,
                mse_h: real(f[2])?,
                mse_x: real(f[3])?,
                crlb_ref: real(f[4])?,
                trials: int(f[5])?,
            })
        })
        .collect()
}

/// Reads and parses a CSV file.
///
/// # Errors
/// [`CsvError`] for IO or format problems.
pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>, CsvError> {
    let text = std::fs::read_to_string(path).map_err(|source| CsvError::Io { path: path.to_owned(), source })?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(mse_h: f64) -> MetricsRecord {
        MetricsRecord { ecc: 7, explorations_total: 24, mse_h, mse_x: 1.234_567_890_123_456e-5, crlb_ref: f64::NAN, trials: 3 }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(to_csv_string(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn nan_literal_and_precision() {
        let s = to_csv_string(&[rec(0.1)]);
        assert_eq!(s.lines().nth(1).unwrap(), "7,24,1.00000000000e-1,1.23456789012e-5,nan,3");
        assert!(!s.contains('\r'));
    }

    #[test]
    fn round_trip() {
        let records: Vec<_> = [0.1, 2.0 / 3.0, 1e-300, 123_456.789].into_iter().map(rec).collect();
        let back = parse_csv(&to_csv_string(&records)).unwrap();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!((a.ecc, a.explorations_total, a.trials), (b.ecc, b.explorations_total, b.trials));
            // Twelve significant digits: absolute 1e-12 below one, relative above.
            assert!((a.mse_h - b.mse_h).abs() <= 1e-12 * a.mse_h.abs().max(1.0));
            assert!((a.mse_x - b.mse_x).abs() <= 1e-12 * a.mse_x.abs().max(1.0));
            assert!((a.mse_h - b.mse_h).abs() <= 5e-12 * a.mse_h.abs());
            assert!(b.crlb_ref.is_nan());
        }
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert!(matches!(parse_csv("a,b\n"), Err(CsvError::Malformed { line: 1, .. })));
        let text = format!("{HEADER}\n1,6,0.1,0.2,nan\n");
        assert!(matches!(parse_csv(&text), Err(CsvError::Malformed { line: 2, .. })));
    }

    #[test]
    fn io_error_names_path() {
        let err = emit_csv(&[], Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
