//! Evenly spaced time series and the transforms every test in the crate
//! consumes: log returns, first differences, squaring, correlograms and
//! funding-window TWAP aggregation.

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Seconds in one funding period (8 hours).
pub const FUNDING_PERIOD_SECS: i64 = 8 * 3600;
/// Seconds in one minute — the cadence of raw premium/interest samples.
pub const MINUTE_SECS: i64 = 60;
/// UTC offset of the first funding timestamp of the day (04:00 UTC).
pub const FUNDING_ANCHOR_SECS: i64 = 4 * 3600;

/// A timestamped series with strictly increasing, equally spaced observations.
///
/// The value unit depends on content: price in quote currency, funding rate as
/// a decimal fraction per 8-hour period, or any derived quantity. Values are
/// immutable after construction; every operation returns a new series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    timestamps: Vec<DateTime<Utc>>,
    values: Vec<f64>,
    cadence_secs: i64,
}

impl Series {
    /// Build a series from parallel timestamp/value vectors, validating the
    /// spacing invariant.
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        values: Vec<f64>,
        cadence_secs: i64,
    ) -> Result<Self> {
        if timestamps.is_empty() || timestamps.len() != values.len() {
            return Err(Error::SeriesTooShort {
                need: 1,
                got: timestamps.len().min(values.len()),
            });
        }
        if cadence_secs <= 0 {
            return Err(Error::WrongCadence {
                need: 1,
                got: cadence_secs,
            });
        }
        for i in 1..timestamps.len() {
            let gap = (timestamps[i] - timestamps[i - 1]).num_seconds();
            if gap <= 0 {
                return Err(Error::UnorderedTimestamps { index: i });
            }
            if gap != cadence_secs {
                return Err(Error::UnevenSpacing {
                    index: i,
                    expected: cadence_secs,
                    found: gap,
                });
            }
        }
        Ok(Series {
            timestamps,
            values,
            cadence_secs,
        })
    }

    /// Convenience constructor: timestamps generated from `start` at `cadence_secs`.
    pub fn from_start(start: DateTime<Utc>, cadence_secs: i64, values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len() as i64)
            .map(|i| start + Duration::seconds(i * cadence_secs))
            .collect();
        Series::new(timestamps, values, cadence_secs)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn cadence_secs(&self) -> i64 {
        self.cadence_secs
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.timestamps[0]
    }

    pub fn end(&self) -> DateTime<Utc> {
        *self.timestamps.last().expect("series is never empty")
    }

    /// Replace the values, keeping timestamps and cadence. Lengths must match.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                index: 0,
                need: self.len(),
                got: values.len(),
            });
        }
        Ok(Series {
            timestamps: self.timestamps.clone(),
            values,
            cadence_secs: self.cadence_secs,
        })
    }

    /// Sub-series dropping the first `n` observations.
    pub fn skip(&self, n: usize) -> Result<Self> {
        if n >= self.len() {
            return Err(Error::SeriesTooShort {
                need: n + 1,
                got: self.len(),
            });
        }
        Ok(Series {
            timestamps: self.timestamps[n..].to_vec(),
            values: self.values[n..].to_vec(),
            cadence_secs: self.cadence_secs,
        })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample variance with the 1/(n-1) denominator; 0 for a single point.
    pub fn variance(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (self.len() - 1) as f64
    }

    /// Subtract the sample mean from every value.
    pub fn demean(&self) -> Self {
        let m = self.mean();
        Series {
            timestamps: self.timestamps.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
            cadence_secs: self.cadence_secs,
        }
    }
}

/// One row of a correlogram: sample ACF/PACF at a lag plus the cumulative
/// Ljung–Box statistic and its chi-square p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramRow {
    pub lag: usize,
    pub acf: f64,
    pub pacf: f64,
    pub q_stat: f64,
    pub q_pvalue: f64,
}

/// Log returns: `ln(s_t) - ln(s_{t-1})`, aligned to the later observation.
///
/// Fails with [`Error::NonPositiveValue`] if any value is `<= 0`; funding
/// rates change sign, so they go through [`first_difference`] instead.
pub fn log_returns(s: &Series) -> Result<Series> {
    if s.len() < 2 {
        return Err(Error::SeriesTooShort {
            need: 2,
            got: s.len(),
        });
    }
    if let Some((index, &value)) = s.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonPositiveValue { index, value });
    }
    let values = s.values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    Ok(Series {
        timestamps: s.timestamps[1..].to_vec(),
        values,
        cadence_secs: s.cadence_secs,
    })
}

/// First difference `s_t - s_{t-1}`, aligned to the later observation.
pub fn first_difference(s: &Series) -> Result<Series> {
    if s.len() < 2 {
        return Err(Error::SeriesTooShort {
            need: 2,
            got: s.len(),
        });
    }
    let values = s.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(Series {
        timestamps: s.timestamps[1..].to_vec(),
        values,
        cadence_secs: s.cadence_secs,
    })
}

/// Elementwise square, timestamps preserved.
pub fn square(s: &Series) -> Series {
    Series {
        timestamps: s.timestamps.clone(),
        values: s.values.iter().map(|v| v * v).collect(),
        cadence_secs: s.cadence_secs,
    }
}

/// Running sum, timestamps preserved. Inverse of [`first_difference`] up to
/// the dropped first element.
pub fn cumulative_sum(s: &Series) -> Series {
    let mut acc = 0.0;
    let values = s
        .values
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    Series {
        timestamps: s.timestamps.clone(),
        values,
        cadence_secs: s.cadence_secs,
    }
}

/// Sample autocorrelations with the biased (divide-by-n) autocovariance
/// estimator, partial autocorrelations via the Durbin–Levinson recursion and
/// Ljung–Box Q statistics with chi-square p-values.
pub fn correlogram(s: &Series, max_lag: usize) -> Result<Vec<CorrelogramRow>> {
    let n = s.len();
    if max_lag == 0 || 2 * max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let mean = s.mean();
    let centered: Vec<f64> = s.values.iter().map(|v| v - mean).collect();
    let gamma0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if gamma0 <= f64::EPSILON * mean.abs().max(1.0) {
        return Err(Error::DegenerateSeries);
    }

    let acf: Vec<f64> = (1..=max_lag)
        .map(|k| {
            let cov = (k..n).map(|t| centered[t] * centered[t - k]).sum::<f64>() / n as f64;
            cov / gamma0
        })
        .collect();
    let pacf = durbin_levinson(&acf);

    let nf = n as f64;
    let mut q = 0.0;
    let mut rows = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let rho = acf[k - 1];
        q += nf * (nf + 2.0) * rho * rho / (nf - k as f64);
        let chi = ChiSquared::new(k as f64).expect("positive dof");
        rows.push(CorrelogramRow {
            lag: k,
            acf: rho,
            pacf: pacf[k - 1],
            q_stat: q,
            q_pvalue: 1.0 - chi.cdf(q),
        });
    }
    Ok(rows)
}

/// Durbin–Levinson recursion: partial autocorrelations from autocorrelations
/// `rho[0] = rho_1, rho[1] = rho_2, ...`.
fn durbin_levinson(rho: &[f64]) -> Vec<f64> {
    let m = rho.len();
    let mut pacf = Vec::with_capacity(m);
    let mut phi_prev: Vec<f64> = Vec::new();
    for k in 1..=m {
        let phi_kk = if k == 1 {
            rho[0]
        } else {
            let num = rho[k - 1]
                - (1..k).map(|j| phi_prev[j - 1] * rho[k - 1 - j]).sum::<f64>();
            let den = 1.0 - (1..k).map(|j| phi_prev[j - 1] * rho[j - 1]).sum::<f64>();
            if den.abs() < 1e-14 {
                0.0
            } else {
                num / den
            }
        };
        let mut phi_k = vec![0.0; k];
        phi_k[k - 1] = phi_kk;
        for j in 1..k {
            phi_k[j - 1] = phi_prev[j - 1] - phi_kk * phi_prev[k - 1 - j];
        }
        pacf.push(phi_kk);
        phi_prev = phi_k;
    }
    pacf
}

/// Time-weighted average over non-overlapping windows aligned to the funding
/// schedule (04:00 / 12:00 / 20:00 UTC for the 8-hour window). Windows are
/// right-closed at the funding timestamp: the window ending at B covers
/// `(B - window, B]`. With equal minute spacing the time weighting reduces to
/// the arithmetic mean.
pub fn twap(s: &Series, window_secs: i64) -> Result<Series> {
    twap_anchored(s, window_secs, FUNDING_ANCHOR_SECS)
}

/// [`twap`] with an explicit anchor (seconds past UTC midnight of the first
/// window boundary), for non-standard funding schedules.
pub fn twap_anchored(s: &Series, window_secs: i64, anchor_secs: i64) -> Result<Series> {
    if s.cadence_secs != MINUTE_SECS {
        return Err(Error::WrongCadence {
            need: MINUTE_SECS,
            got: s.cadence_secs,
        });
    }
    if window_secs <= 0 || window_secs % s.cadence_secs != 0 {
        return Err(Error::WindowNotMultiple {
            window: window_secs,
            cadence: s.cadence_secs,
        });
    }
    let per_window = (window_secs / s.cadence_secs) as usize;

    // Right-closed boundary at or after t.
    let boundary_after = |t: DateTime<Utc>| -> i64 {
        let unix = t.timestamp();
        let rem = (unix - anchor_secs).rem_euclid(window_secs);
        if rem == 0 {
            unix
        } else {
            unix + (window_secs - rem)
        }
    };

    let mut out_ts: Vec<DateTime<Utc>> = Vec::new();
    let mut out_vals: Vec<f64> = Vec::new();
    let mut current_end = boundary_after(s.timestamps[0]);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ts, v) in s.timestamps.iter().zip(&s.values) {
        let end = boundary_after(*ts);
        if end != current_end {
            finish_window(current_end, sum, count, per_window, &mut out_ts, &mut out_vals)?;
            current_end = end;
            sum = 0.0;
            count = 0;
        }
        sum += v;
        count += 1;
    }
    finish_window(current_end, sum, count, per_window, &mut out_ts, &mut out_vals)?;

    Series::new(out_ts, out_vals, window_secs)
}

fn finish_window(
    end_unix: i64,
    sum: f64,
    count: usize,
    per_window: usize,
    out_ts: &mut Vec<DateTime<Utc>>,
    out_vals: &mut Vec<f64>,
) -> Result<()> {
    if count != per_window {
        let end = DateTime::<Utc>::from_timestamp(end_unix, 0).expect("valid unix timestamp");
        return Err(Error::IncompleteWindow {
            window_end: end.to_rfc3339(),
            need: per_window,
            got: count,
        });
    }
    out_ts.push(DateTime::<Utc>::from_timestamp(end_unix, 0).expect("valid unix timestamp"));
    out_vals.push(sum / count as f64);
    Ok(())
}

/// Intersect two series on their overlapping timestamp range. Both inputs
/// must share the cadence and phase; returns the number of rows dropped from
/// each side.
pub fn align(a: &Series, b: &Series, a_name: &str, b_name: &str) -> Result<(Series, Series, usize, usize)> {
    if a.cadence_secs != b.cadence_secs {
        return Err(Error::MisalignedSeries {
            reason: format!(
                "cadence mismatch: {}s vs {}s",
                a.cadence_secs, b.cadence_secs
            ),
        });
    }
    let phase_a = a.timestamps[0].timestamp().rem_euclid(a.cadence_secs);
    let phase_b = b.timestamps[0].timestamp().rem_euclid(b.cadence_secs);
    let start = a.start().max(b.start());
    let end = a.end().min(b.end());
    if phase_a != phase_b || start > end {
        return Err(Error::AlignmentError {
            left: a_name.to_string(),
            right: b_name.to_string(),
        });
    }
    let slice = |s: &Series| -> (Series, usize) {
        let from = ((start - s.start()).num_seconds() / s.cadence_secs) as usize;
        let to = s.len() - ((s.end() - end).num_seconds() / s.cadence_secs) as usize;
        let dropped = s.len() - (to - from);
        (
            Series {
                timestamps: s.timestamps[from..to].to_vec(),
                values: s.values[from..to].to_vec(),
                cadence_secs: s.cadence_secs,
            },
            dropped,
        )
    };
    let (sa, da) = slice(a);
    let (sb, db) = slice(b);
    debug_assert_eq!(sa.timestamps, sb.timestamps);
    Ok((sa, sb, da, db))
}

/// True if `t` falls on one of the configured funding hours (UTC).
pub fn is_funding_timestamp(t: DateTime<Utc>, hours: &[u32]) -> bool {
    hours.contains(&t.hour()) && t.minute() == 0 && t.second() == 0
}
