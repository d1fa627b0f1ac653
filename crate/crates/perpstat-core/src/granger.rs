//! Pairwise Granger causality: nested-model F-tests in both directions on an
//! identical effective sample, plus AIC lag selection for the bivariate
//! system.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::regression::ols;
use crate::series::Series;

/// Which series is hypothesized to cause which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

/// One directional test: null hypothesis "the source series does not
/// Granger-cause the target".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerReport {
    pub direction: Direction,
    pub lag_order: usize,
    pub f_statistic: f64,
    pub p_value: f64,
    pub significance_level: f64,
    pub reject_noncausality: bool,
    pub n_effective: usize,
}

fn validate_pair(x: &Series, y: &Series, lag_order: usize) -> Result<()> {
    if x.len() != y.len() || x.timestamps() != y.timestamps() {
        return Err(Error::MisalignedSeries {
            reason: "x and y must share identical timestamps".into(),
        });
    }
    let need = 3 * lag_order + 11;
    if x.len() < need {
        return Err(Error::SeriesTooShort {
            need,
            got: x.len(),
        });
    }
    Ok(())
}

/// Lagged columns `source[t-1] .. source[t-p]` for targets at `start..n`.
fn lag_columns(source: &[f64], lag_order: usize, start: usize) -> Vec<Vec<f64>> {
    let n = source.len();
    (1..=lag_order)
        .map(|j| (start..n).map(|t| source[t - j]).collect())
        .collect()
}

fn one_direction(
    cause: &Series,
    target: &Series,
    lag_order: usize,
    level: f64,
    direction: Direction,
) -> Result<GrangerReport> {
    let start = lag_order;
    let n = target.len();
    let window = target.skip(start)?;

    let own = lag_columns(target.values(), lag_order, start);
    let mut full = own.clone();
    full.extend(lag_columns(cause.values(), lag_order, start));

    let restricted = ols(&window, &own, true)?;
    let unrestricted = ols(&window, &full, true)?;

    let n_effective = n - start;
    let df_num = lag_order as f64;
    let df_den = (n_effective - 2 * lag_order - 1) as f64;
    let ssr_gap = (restricted.ssr - unrestricted.ssr).max(0.0);

    let target_scale: f64 = window.values().iter().map(|v| v * v).sum();
    let exact_fit = unrestricted.ssr <= 1e-14 * restricted.ssr.max(target_scale).max(f64::MIN_POSITIVE);
    let (f_statistic, p_value) = if exact_fit {
        // Deterministic causation: the unrestricted model fits exactly.
        (f64::INFINITY, 0.0)
    } else {
        let f = (ssr_gap / df_num) / (unrestricted.ssr / df_den);
        let dist = FisherSnedecor::new(df_num, df_den).expect("positive dof");
        (f, 1.0 - dist.cdf(f))
    };

    Ok(GrangerReport {
        direction,
        lag_order,
        f_statistic,
        p_value,
        significance_level: level,
        reject_noncausality: p_value < level,
        n_effective,
    })
}

/// Both directional tests on the same effective sample. The inputs must be
/// stationary (the pipeline enforces this upstream via the unit-root stage).
pub fn granger_test(
    x: &Series,
    y: &Series,
    lag_order: usize,
    level: f64,
) -> Result<(GrangerReport, GrangerReport)> {
    if level <= 0.0 || level >= 1.0 {
        return Err(Error::InvalidLevel { level });
    }
    if lag_order == 0 {
        return Err(Error::LagTooLarge {
            max_lag: 0,
            len: x.len(),
        });
    }
    validate_pair(x, y, lag_order)?;
    let x_to_y = one_direction(x, y, lag_order, level, Direction::XToY)?;
    let y_to_x = one_direction(y, x, lag_order, level, Direction::YToX)?;
    debug_assert_eq!(x_to_y.n_effective, y_to_x.n_effective);
    Ok((x_to_y, y_to_x))
}

/// AIC lag selection for the bivariate system: for each candidate lag the two
/// equations are fit on the common `max_lag`-trimmed window and scored by the
/// system Gaussian log-likelihood; `k` counts regression coefficients.
pub fn select_var_lag(x: &Series, y: &Series, max_lag: usize) -> Result<usize> {
    validate_pair(x, y, max_lag.max(1))?;
    if max_lag == 0 {
        return Err(Error::LagTooLarge {
            max_lag: 0,
            len: x.len(),
        });
    }
    let n = x.len();
    let start = max_lag;
    let n_eff = (n - start) as f64;

    let mut best = (1usize, f64::INFINITY);
    for p in 1..=max_lag {
        let mut cols_y = lag_columns(y.values(), p, start);
        cols_y.extend(lag_columns(x.values(), p, start));
        let mut cols_x = lag_columns(x.values(), p, start);
        cols_x.extend(lag_columns(y.values(), p, start));

        let fit_y = ols(&y.skip(start)?, &cols_y, true)?;
        let fit_x = ols(&x.skip(start)?, &cols_x, true)?;

        // System likelihood with the MLE residual covariance.
        let s_yy = fit_y.ssr / n_eff;
        let s_xx = fit_x.ssr / n_eff;
        let s_xy = fit_y
            .residuals
            .values()
            .iter()
            .zip(fit_x.residuals.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n_eff;
        let det = (s_yy * s_xx - s_xy * s_xy).max(1e-300);
        let log_lik =
            -0.5 * n_eff * (2.0 * (2.0 * std::f64::consts::PI).ln() + det.ln() + 2.0);
        let k = 2 * (1 + 2 * p);
        let crit = 2.0 * k as f64 - 2.0 * log_lik;
        if crit < best.1 - 1e-12 {
            best = (p, crit);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::FUNDING_PERIOD_SECS;
    use chrono::{TimeZone, Utc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series(values: Vec<f64>) -> Series {
        let start = Utc.with_ymd_and_hms(2016, 6, 4, 4, 0, 0).unwrap();
        Series::from_start(start, FUNDING_PERIOD_SECS, values).unwrap()
    }

    fn noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let g = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| g.sample(rng)).collect()
    }

    /// x white noise; y_t = beta * x_{t-1} + noise.
    fn causal_pair(n: usize, beta: f64, seed: u64) -> (Series, Series) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(n, &mut rng);
        let e = noise(n, &mut rng);
        let y: Vec<f64> = (0..n)
            .map(|t| if t == 0 { e[0] } else { beta * x[t - 1] + e[t] })
            .collect();
        (series(x), series(y))
    }

    #[test]
    fn directional_power_and_size() {
        let trials = 100;
        let mut xy_rejected_at_1pct = 0;
        let mut yx_rejected_at_5pct = 0;
        for seed in 0..trials {
            let (x, y) = causal_pair(2000, 0.8, 40_000 + seed);
            let (x_to_y, _) = granger_test(&x, &y, 1, 0.01).unwrap();
            if x_to_y.reject_noncausality {
                xy_rejected_at_1pct += 1;
            }
            let (_, y_to_x) = granger_test(&x, &y, 1, 0.05).unwrap();
            if y_to_x.reject_noncausality {
                yx_rejected_at_5pct += 1;
            }
        }
        assert!(xy_rejected_at_1pct >= 99, "x->y power {xy_rejected_at_1pct}/100");
        let rate = yx_rejected_at_5pct as f64 / trials as f64;
        assert!((0.02..=0.09).contains(&rate), "y->x size {rate}");
    }

    #[test]
    fn size_on_independent_noise() {
        let trials = 500;
        let mut rejections = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(60_000 + seed);
            let x = series(noise(300, &mut rng));
            let y = series(noise(300, &mut rng));
            let (a, b) = granger_test(&x, &y, 2, 0.05).unwrap();
            if a.reject_noncausality {
                rejections += 1;
            }
            if b.reject_noncausality {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / (2 * trials) as f64;
        assert!((0.02..=0.09).contains(&rate), "size {rate}");
    }

    #[test]
    fn deterministic_shift_gives_zero_pvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = noise(200, &mut rng);
        let y: Vec<f64> = (0..200)
            .map(|t| if t == 0 { 0.0 } else { x[t - 1] })
            .collect();
        let (x_to_y, _) = granger_test(&series(x), &series(y), 1, 0.05).unwrap();
        assert_eq!(x_to_y.p_value, 0.0);
        assert!(x_to_y.f_statistic.is_infinite());
    }

    #[test]
    fn argument_swap_swaps_reports() {
        let (x, y) = causal_pair(600, 0.5, 99);
        let (a1, b1) = granger_test(&x, &y, 2, 0.05).unwrap();
        let (a2, b2) = granger_test(&y, &x, 2, 0.05).unwrap();
        assert!((a1.f_statistic - b2.f_statistic).abs() < 1e-12);
        assert!((b1.f_statistic - a2.f_statistic).abs() < 1e-12);
        assert_eq!(a1.n_effective, b1.n_effective);
    }

    #[test]
    fn f_statistic_nonnegative_and_scale_invariant() {
        let (x, y) = causal_pair(400, 0.3, 123);
        let (a, b) = granger_test(&x, &y, 3, 0.05).unwrap();
        assert!(a.f_statistic >= -1e-10);
        assert!(b.f_statistic >= -1e-10);

        let xs = x
            .with_values(x.values().iter().map(|v| 1000.0 * v).collect())
            .unwrap();
        let ys = y
            .with_values(y.values().iter().map(|v| 0.001 * v).collect())
            .unwrap();
        let (a2, b2) = granger_test(&xs, &ys, 3, 0.05).unwrap();
        assert_eq!(a.reject_noncausality, a2.reject_noncausality);
        assert_eq!(b.reject_noncausality, b2.reject_noncausality);
        assert!((a.f_statistic - a2.f_statistic).abs() < 1e-6 * a.f_statistic.max(1.0));
    }

    #[test]
    fn misaligned_series_rejected() {
        let (x, y) = causal_pair(100, 0.5, 1);
        let y_short = y.skip(1).unwrap();
        assert!(matches!(
            granger_test(&x, &y_short, 1, 0.05),
            Err(Error::MisalignedSeries { .. })
        ));
    }

    #[test]
    fn lag_selection_white_noise_prefers_one() {
        let trials = 100;
        let mut chose_one = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(70_000 + seed);
            let x = series(noise(800, &mut rng));
            let y = series(noise(800, &mut rng));
            if select_var_lag(&x, &y, 5).unwrap() == 1 {
                chose_one += 1;
            }
        }
        assert!(chose_one * 2 > trials, "lag 1 chosen {chose_one}/{trials}");
    }

    #[test]
    fn lag_selection_finds_lag_three_link() {
        let trials = 100;
        let mut at_least_three = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(80_000 + seed);
            let x = noise(2000, &mut rng);
            let e = noise(2000, &mut rng);
            let y: Vec<f64> = (0..2000)
                .map(|t| if t < 3 { e[t] } else { 0.9 * x[t - 3] + e[t] })
                .collect();
            if select_var_lag(&series(x), &series(y), 6).unwrap() >= 3 {
                at_least_three += 1;
            }
        }
        assert!(at_least_three >= 80, "lag >=3 in {at_least_three}/100");
    }

    #[test]
    fn single_candidate_lag() {
        let (x, y) = causal_pair(200, 0.5, 2);
        assert_eq!(select_var_lag(&x, &y, 1).unwrap(), 1);
    }
}
