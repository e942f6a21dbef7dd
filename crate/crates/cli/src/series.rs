//! Plain-text time-series ingestion.
//!
//! A series file holds one sample per line, either `value` alone or
//! `time value` (whitespace or comma separated). Lines starting with `#`
//! are headers and may carry `key=value` metadata; `dt` (seconds) is
//! required when no time column is present. A time column must be evenly
//! spaced to within 1e-6 relative.

use std::path::Path;

use specdet::model::TimeSeries;

use crate::error::{CliError, CliResult};

const SPACING_TOL: f64 = 1e-6;

fn ingest(path: &Path, line: Option<usize>, message: impl Into<String>) -> CliError {
    CliError::Ingestion {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_header_dt(text: &str) -> Option<f64> {
    // accepts "# dt=60", "# dt = 60.0", alongside other metadata tokens
    for raw in text.split_whitespace() {
        if let Some(value) = raw.strip_prefix("dt=") {
            return value.parse().ok();
        }
    }
    let mut it = text.split_whitespace().peekable();
    while let Some(tok) = it.next() {
        if tok == "dt" {
            if let Some(&"=") = it.peek() {
                it.next();
                return it.next().and_then(|v| v.parse().ok());
            }
        } else if tok == "dt=" {
            return it.next().and_then(|v| v.parse().ok());
        }
    }
    None
}

/// Reads a series file into a [`TimeSeries`], taking `dt` from the header
/// or inferring it from the time column.
pub fn load_series(path: &Path) -> CliResult<TimeSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ingest(path, None, format!("cannot read file: {e}")))?;

    let mut header_dt: Option<f64> = None;
    let mut times: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut columns: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(dt) = parse_header_dt(rest) {
                header_dt = Some(dt);
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        match columns {
            None => {
                if fields.len() != 1 && fields.len() != 2 {
                    return Err(ingest(
                        path,
                        Some(lineno),
                        format!("expected 1 or 2 columns, found {}", fields.len()),
                    ));
                }
                columns = Some(fields.len());
            }
            Some(c) if c != fields.len() => {
                return Err(ingest(
                    path,
                    Some(lineno),
                    format!("expected {c} columns, found {}", fields.len()),
                ));
            }
            _ => {}
        }
        let parse = |s: &str, what: &str| -> CliResult<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| ingest(path, Some(lineno), format!("cannot parse {what} '{s}'")))?;
            if !v.is_finite() {
                return Err(ingest(
                    path,
                    Some(lineno),
                    format!("{what} '{s}' is not finite"),
                ));
            }
            Ok(v)
        };
        if fields.len() == 2 {
            times.push(parse(fields[0], "time")?);
            values.push(parse(fields[1], "value")?);
        } else {
            values.push(parse(fields[0], "value")?);
        }
    }

    if values.is_empty() {
        return Err(ingest(path, None, "file contains no samples"));
    }

    let dt = if times.is_empty() {
        header_dt
            .ok_or_else(|| ingest(path, None, "no time column and no '# dt=<seconds>' header"))?
    } else {
        if times.len() < 2 {
            return Err(ingest(path, None, "time column needs at least two rows"));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(ingest(
                path,
                Some(2),
                format!("non-increasing time column (step {dt})"),
            ));
        }
        // uniform spacing within SPACING_TOL relative; name the first bad row
        for (i, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if ((step - dt) / dt).abs() > SPACING_TOL {
                return Err(ingest(
                    path,
                    Some(data_line_of(&text, i + 1)),
                    format!("uneven sampling: step {step} differs from {dt}"),
                ));
            }
        }
        if let Some(h) = header_dt {
            if ((h - dt) / dt).abs() > SPACING_TOL {
                return Err(ingest(
                    path,
                    None,
                    format!("header dt={h} disagrees with time column dt={dt}"),
                ));
            }
        }
        dt
    };

    TimeSeries::new(values, dt).map_err(|e| ingest(path, None, e.to_string()))
}

// File line (1-based) of the n-th data row (0-based), skipping headers.
fn data_line_of(text: &str, nth: usize) -> usize {
    let mut count = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if count == nth {
            return idx + 1;
        }
        count += 1;
    }
    0
}
