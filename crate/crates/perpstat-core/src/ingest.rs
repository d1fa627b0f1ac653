//! CSV ingestion. Input format: header row `timestamp,value`, ISO-8601
//! timestamps with an explicit UTC offset, plain decimal values.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

/// What to do with gaps in otherwise evenly spaced input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    /// Reject unevenly spaced series (the default — silent interpolation
    /// corrupts test statistics).
    #[default]
    Reject,
    /// Carry the last observation forward across gaps that are whole
    /// multiples of the cadence; the fill count is reported.
    Previous,
}

/// Row counts from one CSV ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows_read: usize,
    pub rows_filled: usize,
}

/// Read a `timestamp,value` CSV into a [`Series`]. The cadence is taken from
/// the first pair of rows; every later gap must match it (or, with
/// [`FillPolicy::Previous`], be a whole multiple of it).
pub fn read_series_csv(path: &Path, fill: FillPolicy) -> Result<(Series, IngestStats)> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| map_csv_error(&display, e))?;

    let headers = reader
        .headers()
        .map_err(|e| map_csv_error(&display, e))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("timestamp") {
        return Err(Error::ParseError {
            path: display,
            line: 1,
            reason: format!(
                "expected header `timestamp,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut timestamps: Vec<DateTime<Utc>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| map_csv_error(&display, e))?;
        let ts_field = record.get(0).unwrap_or_default();
        let val_field = record.get(1).unwrap_or_default();
        let ts = DateTime::parse_from_rfc3339(ts_field)
            .map_err(|e| Error::ParseError {
                path: display.clone(),
                line,
                reason: format!("bad timestamp `{ts_field}`: {e}"),
            })?
            .with_timezone(&Utc);
        let value: f64 = val_field.parse().map_err(|_| Error::ParseError {
            path: display.clone(),
            line,
            reason: format!("bad value `{val_field}`"),
        })?;
        if !value.is_finite() {
            return Err(Error::ParseError {
                path: display.clone(),
                line,
                reason: format!("non-finite value `{val_field}`"),
            });
        }
        timestamps.push(ts);
        values.push(value);
    }
    if timestamps.len() < 2 {
        return Err(Error::ParseError {
            path: display,
            line: timestamps.len() + 1,
            reason: "need at least two data rows to establish the cadence".into(),
        });
    }

    let cadence = (timestamps[1] - timestamps[0]).num_seconds();
    if cadence <= 0 {
        return Err(Error::UnorderedTimestamps { index: 1 });
    }
    let rows_read = values.len();
    let mut rows_filled = 0usize;

    let (timestamps, values) = match fill {
        FillPolicy::Reject => (timestamps, values),
        FillPolicy::Previous => {
            let mut out_ts = vec![timestamps[0]];
            let mut out_vals = vec![values[0]];
            for i in 1..timestamps.len() {
                let gap = (timestamps[i] - timestamps[i - 1]).num_seconds();
                if gap <= 0 {
                    return Err(Error::UnorderedTimestamps { index: i });
                }
                if gap % cadence != 0 {
                    return Err(Error::UnevenSpacing {
                        index: i,
                        expected: cadence,
                        found: gap,
                    });
                }
                let missing = gap / cadence - 1;
                for k in 1..=missing {
                    out_ts.push(timestamps[i - 1] + chrono::Duration::seconds(k * cadence));
                    out_vals.push(values[i - 1]);
                    rows_filled += 1;
                }
                out_ts.push(timestamps[i]);
                out_vals.push(values[i]);
            }
            (out_ts, out_vals)
        }
    };

    let series = Series::new(timestamps, values, cadence)?;
    Ok((
        series,
        IngestStats {
            rows_read,
            rows_filled,
        },
    ))
}

/// Read a `timestamp,interest,premium` CSV of minute-level funding inputs
/// into two aligned series.
pub fn read_funding_inputs_csv(path: &Path) -> Result<(Series, Series)> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| map_csv_error(&display, e))?;
    let headers = reader
        .headers()
        .map_err(|e| map_csv_error(&display, e))?
        .clone();
    let expected = ["timestamp", "interest", "premium"];
    if headers.iter().take(3).collect::<Vec<_>>() != expected {
        return Err(Error::ParseError {
            path: display,
            line: 1,
            reason: format!(
                "expected header `timestamp,interest,premium`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut timestamps = Vec::new();
    let mut interest = Vec::new();
    let mut premium = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| map_csv_error(&display, e))?;
        let parse_f64 = |field: usize| -> Result<f64> {
            let raw = record.get(field).unwrap_or_default();
            raw.parse().map_err(|_| Error::ParseError {
                path: display.clone(),
                line,
                reason: format!("bad value `{raw}`"),
            })
        };
        let ts_field = record.get(0).unwrap_or_default();
        let ts = DateTime::parse_from_rfc3339(ts_field)
            .map_err(|e| Error::ParseError {
                path: display.clone(),
                line,
                reason: format!("bad timestamp `{ts_field}`: {e}"),
            })?
            .with_timezone(&Utc);
        timestamps.push(ts);
        interest.push(parse_f64(1)?);
        premium.push(parse_f64(2)?);
    }
    if timestamps.len() < 2 {
        return Err(Error::ParseError {
            path: display,
            line: timestamps.len() + 1,
            reason: "need at least two data rows".into(),
        });
    }
    let cadence = (timestamps[1] - timestamps[0]).num_seconds();
    let i_series = Series::new(timestamps.clone(), interest, cadence)?;
    let p_series = Series::new(timestamps, premium, cadence)?;
    Ok((i_series, p_series))
}

/// Write a series back out in the ingestion format.
pub fn write_series_csv(series: &Series, out: &mut dyn std::io::Write) -> Result<()> {
    writeln!(out, "timestamp,value").map_err(io_err)?;
    for (ts, v) in series.timestamps().iter().zip(series.values()) {
        writeln!(out, "{},{}", ts.to_rfc3339(), v).map_err(io_err)?;
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<writer>".into(),
        source: e,
    }
}

fn map_csv_error(path: &str, e: csv::Error) -> Error {
    let line = match e.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => pos.as_ref().map(|p| p.line() as usize).unwrap_or(0),
        csv::ErrorKind::UnequalLengths { pos, .. } => {
            pos.as_ref().map(|p| p.line() as usize).unwrap_or(0)
        }
        _ => 0,
    };
    Error::ParseError {
        path: path.to_string(),
        line,
        reason: e.to_string(),
    }
}
