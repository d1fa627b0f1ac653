//! Augmented Dickey–Fuller unit-root testing in the three deterministic
//! specifications (none, constant, constant + linear trend), with AIC lag
//! selection and MacKinnon response-surface critical values and p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::regression::{aic, ols, RegressionFit};
use crate::series::{first_difference, Series};

/// Deterministic terms included in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicSpec {
    None,
    Constant,
    ConstantAndTrend,
}

impl DeterministicSpec {
    pub const ALL: [DeterministicSpec; 3] = [
        DeterministicSpec::None,
        DeterministicSpec::Constant,
        DeterministicSpec::ConstantAndTrend,
    ];

    /// Table wording for the exogenous-regressor column.
    pub fn label(&self) -> &'static str {
        match self {
            DeterministicSpec::None => "None",
            DeterministicSpec::Constant => "Constant",
            DeterministicSpec::ConstantAndTrend => "Constant and Linear Trend",
        }
    }

    fn index(&self) -> usize {
        match self {
            DeterministicSpec::None => 0,
            DeterministicSpec::Constant => 1,
            DeterministicSpec::ConstantAndTrend => 2,
        }
    }
}

/// Critical values at the three conventional levels. More negative at
/// tighter levels: `pct1 < pct5 < pct10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub pct1: f64,
    pub pct5: f64,
    pub pct10: f64,
}

impl CriticalValues {
    pub fn at_level(&self, level: f64) -> Option<f64> {
        let eps = 1e-9;
        if (level - 0.01).abs() < eps {
            Some(self.pct1)
        } else if (level - 0.05).abs() < eps {
            Some(self.pct5)
        } else if (level - 0.10).abs() < eps {
            Some(self.pct10)
        } else {
            None
        }
    }
}

/// Result of one ADF regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfReport {
    pub spec: DeterministicSpec,
    /// Number of lagged differences included (chosen by AIC).
    pub lag_order: usize,
    /// t-ratio on the lagged level.
    pub t_statistic: f64,
    pub critical_values: CriticalValues,
    /// MacKinnon approximate asymptotic p-value.
    pub p_value: f64,
    pub significance_level: f64,
    pub reject_unit_root: bool,
    /// 0 = level series, 1 = first difference; set by the caller that
    /// differenced the input.
    pub differencing_level: u32,
    pub n_effective: usize,
}

// MacKinnon (2010) response-surface coefficients for the tau distribution,
// single series. Critical value = b0 + b1/n + b2/n^2 + b3/n^3 with n the
// regression sample size. Rows: 1%, 5%, 10%.
const TAU_NC_2010: [[f64; 4]; 3] = [
    [-2.56574, -2.2358, -3.627, 0.0],
    [-1.94100, -0.2686, -3.365, 31.223],
    [-1.61682, 0.2656, -2.714, 25.364],
];
const TAU_C_2010: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const TAU_CT_2010: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

// MacKinnon (1994) p-value approximation: Phi(polynomial(t)) in two regimes
// split at tau_star, clipped to 0/1 outside [tau_min, tau_max].
const TAU_STAR: [f64; 3] = [-1.04, -1.61, -2.89];
const TAU_MIN: [f64; 3] = [-19.04, -18.83, -16.18];
const TAU_MAX: [f64; 3] = [f64::INFINITY, 2.74, 0.7];
const TAU_SMALLP: [[f64; 3]; 3] = [
    [0.6344, 1.2378, 0.032496],
    [2.1659, 1.4412, 0.038269],
    [3.2512, 1.6047, 0.049588],
];
const TAU_LARGEP: [[f64; 4]; 3] = [
    [0.4797, 0.93557, -0.06999, 0.033066],
    [1.7339, 0.93202, -0.12745, -0.010368],
    [2.5261, 0.61654, -0.37956, -0.060285],
];

/// Response-surface critical values for a regression with `n_effective`
/// observations.
pub fn mackinnon_critical_values(spec: DeterministicSpec, n_effective: usize) -> CriticalValues {
    let table = match spec {
        DeterministicSpec::None => &TAU_NC_2010,
        DeterministicSpec::Constant => &TAU_C_2010,
        DeterministicSpec::ConstantAndTrend => &TAU_CT_2010,
    };
    let n = n_effective as f64;
    let eval = |row: &[f64; 4]| row[0] + row[1] / n + row[2] / (n * n) + row[3] / (n * n * n);
    CriticalValues {
        pct1: eval(&table[0]),
        pct5: eval(&table[1]),
        pct10: eval(&table[2]),
    }
}

/// Approximate asymptotic p-value for an ADF t-statistic.
pub fn mackinnon_pvalue(t_statistic: f64, spec: DeterministicSpec) -> f64 {
    let i = spec.index();
    if t_statistic > TAU_MAX[i] {
        return 1.0;
    }
    if t_statistic < TAU_MIN[i] {
        return 0.0;
    }
    let poly = if t_statistic <= TAU_STAR[i] {
        let c = &TAU_SMALLP[i];
        c[0] + c[1] * t_statistic + c[2] * t_statistic * t_statistic
    } else {
        let c = &TAU_LARGEP[i];
        ((c[3] * t_statistic + c[2]) * t_statistic + c[1]) * t_statistic + c[0]
    };
    Normal::standard().cdf(poly)
}

/// Fit the ADF regression with `lag_order` lagged differences, using
/// observations from `start` (>= lag_order + 1) onward.
fn adf_fit(
    s: &Series,
    spec: DeterministicSpec,
    lag_order: usize,
    start: usize,
) -> Result<(RegressionFit, f64)> {
    let y = s.values();
    let n = y.len();
    debug_assert!(start > lag_order);

    let dy: Vec<f64> = (1..n).map(|t| y[t] - y[t - 1]).collect();
    let target = s.skip(start)?.with_values(dy[start - 1..].to_vec())?;

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(lag_order + 2);
    cols.push((start..n).map(|t| y[t - 1]).collect());
    for j in 1..=lag_order {
        cols.push((start..n).map(|t| dy[t - 1 - j]).collect());
    }
    let include_intercept = spec != DeterministicSpec::None;
    if spec == DeterministicSpec::ConstantAndTrend {
        cols.push((start..n).map(|t| t as f64).collect());
    }
    let fit = ols(&target, &cols, include_intercept)?;
    let idx = usize::from(include_intercept);
    let coef = fit.coefficients[idx];
    let se = fit.standard_errors[idx];
    if se <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let t_stat = coef / se;
    Ok((fit, t_stat))
}

/// ADF test with AIC lag selection over `0..=max_lag`.
///
/// Selection compares all candidates on the same `max_lag`-trimmed window
/// (ties to the smaller lag); the reported regression is then re-fit with the
/// chosen lag on the longest available window.
pub fn adf_test(
    s: &Series,
    spec: DeterministicSpec,
    max_lag: usize,
    level: f64,
) -> Result<AdfReport> {
    if level <= 0.0 || level >= 1.0 {
        return Err(Error::InvalidLevel { level });
    }
    if s.len() < 25 + max_lag {
        return Err(Error::SeriesTooShort {
            need: 25 + max_lag,
            got: s.len(),
        });
    }
    if s.variance() <= 0.0 {
        return Err(Error::DegenerateSeries);
    }

    let scan_start = max_lag + 1;
    let mut best = (0usize, f64::INFINITY);
    for p in 0..=max_lag {
        let (fit, _) = adf_fit(s, spec, p, scan_start)?;
        let crit = aic(fit.log_likelihood, fit.n_params);
        if crit < best.1 - 1e-12 {
            best = (p, crit);
        }
    }
    let lag_order = best.0;

    let (fit, t_statistic) = adf_fit(s, spec, lag_order, lag_order + 1)?;
    let n_effective = fit.n_obs;
    let critical_values = mackinnon_critical_values(spec, n_effective);
    let p_value = mackinnon_pvalue(t_statistic, spec);
    let reject_unit_root = match critical_values.at_level(level) {
        Some(cv) => t_statistic < cv,
        None => p_value < level,
    };

    Ok(AdfReport {
        spec,
        lag_order,
        t_statistic,
        critical_values,
        p_value,
        significance_level: level,
        reject_unit_root,
        differencing_level: 0,
        n_effective,
    })
}

/// Order of integration: 0 if the level rejects the unit root, 1 if the first
/// difference does, otherwise 2 (meaning "at least 2"; higher orders are
/// never needed here).
pub fn integration_order(
    s: &Series,
    spec: DeterministicSpec,
    max_lag: usize,
    level: f64,
) -> Result<u32> {
    if adf_test(s, spec, max_lag, level)?.reject_unit_root {
        return Ok(0);
    }
    let d1 = first_difference(s)?;
    if adf_test(&d1, spec, max_lag, level)?.reject_unit_root {
        return Ok(1);
    }
    Ok(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::FUNDING_PERIOD_SECS;
    use chrono::{TimeZone, Utc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal as Gaussian};

    fn series(values: Vec<f64>) -> Series {
        let start = Utc.with_ymd_and_hms(2016, 6, 4, 4, 0, 0).unwrap();
        Series::from_start(start, FUNDING_PERIOD_SECS, values).unwrap()
    }

    fn random_walk(n: usize, seed: u64) -> Series {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gaussian::new(0.0, 1.0).unwrap();
        let mut acc = 0.0;
        series(
            (0..n)
                .map(|_| {
                    acc += g.sample(&mut rng);
                    acc
                })
                .collect(),
        )
    }

    fn ar1(phi: f64, n: usize, seed: u64) -> Series {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gaussian::new(0.0, 1.0).unwrap();
        let mut prev = 0.0;
        series(
            (0..n)
                .map(|_| {
                    prev = phi * prev + g.sample(&mut rng);
                    prev
                })
                .collect(),
        )
    }

    #[test]
    fn critical_values_match_published_table_at_3649() {
        let cv = mackinnon_critical_values(DeterministicSpec::Constant, 3649);
        assert!((cv.pct1 - (-3.431965)).abs() < 0.01);
        assert!((cv.pct5 - (-2.862139)).abs() < 0.01);
        assert!((cv.pct10 - (-2.567132)).abs() < 0.01);

        let ct = mackinnon_critical_values(DeterministicSpec::ConstantAndTrend, 3649);
        assert!((ct.pct1 - (-3.960568)).abs() < 0.01);
        assert!((ct.pct5 - (-3.411044)).abs() < 0.01);

        assert!(cv.pct1 < cv.pct5 && cv.pct5 < cv.pct10);
    }

    #[test]
    fn random_walk_rarely_rejected() {
        let trials = 200;
        let mut fail_to_reject = 0;
        for seed in 0..trials {
            let s = random_walk(3649, 100 + seed);
            let report = adf_test(&s, DeterministicSpec::Constant, 2, 0.05).unwrap();
            if report.t_statistic > -2.862139 {
                fail_to_reject += 1;
            }
        }
        assert!(
            fail_to_reject * 10 >= trials * 9,
            "failed to reject in {fail_to_reject}/{trials}"
        );
    }

    #[test]
    fn stationary_ar1_rejected_at_one_percent() {
        let trials = 200;
        let mut rejected = 0;
        for seed in 0..trials {
            let s = ar1(0.5, 3649, 900 + seed);
            let report = adf_test(&s, DeterministicSpec::Constant, 2, 0.01).unwrap();
            if report.reject_unit_root {
                rejected += 1;
            }
        }
        assert!(
            rejected * 100 >= trials * 99,
            "rejected in {rejected}/{trials}"
        );
    }

    #[test]
    fn trend_spec_absorbs_deterministic_ramp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let g = Gaussian::new(0.0, 1.0).unwrap();
        let s = series(
            (0..800)
                .map(|t| 0.05 * t as f64 + g.sample(&mut rng))
                .collect(),
        );
        let report = adf_test(&s, DeterministicSpec::ConstantAndTrend, 4, 0.05).unwrap();
        assert!(report.reject_unit_root, "t = {}", report.t_statistic);
    }

    #[test]
    fn spec_variants_differ_only_in_deterministic_terms() {
        let s = random_walk(400, 7);
        let mut params = Vec::new();
        let mut n_eff = Vec::new();
        for spec in DeterministicSpec::ALL {
            let (fit, _) = adf_fit(&s, spec, 2, 3).unwrap();
            params.push(fit.n_params);
            n_eff.push(fit.n_obs);
        }
        assert_eq!(n_eff[0], n_eff[1]);
        assert_eq!(n_eff[1], n_eff[2]);
        assert_eq!(params[1], params[0] + 1);
        assert_eq!(params[2], params[1] + 1);
    }

    #[test]
    fn t_statistic_invariant_under_affine_rescaling() {
        let s = random_walk(500, 11);
        let scaled = s
            .with_values(s.values().iter().map(|v| 37.5 * v + 4000.0).collect())
            .unwrap();
        let a = adf_test(&s, DeterministicSpec::Constant, 3, 0.05).unwrap();
        let b = adf_test(&scaled, DeterministicSpec::Constant, 3, 0.05).unwrap();
        assert!((a.t_statistic - b.t_statistic).abs() < 1e-8);
        assert_eq!(a.lag_order, b.lag_order);
    }

    #[test]
    fn size_at_five_percent() {
        let trials = 500;
        let mut rejections = 0;
        for seed in 0..trials {
            let s = random_walk(400, 3000 + seed);
            if adf_test(&s, DeterministicSpec::Constant, 2, 0.05)
                .unwrap()
                .reject_unit_root
            {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / trials as f64;
        assert!((0.02..=0.09).contains(&rate), "rejection rate {rate}");
    }

    #[test]
    fn integration_orders() {
        let g = Gaussian::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let noise = series((0..600).map(|_| g.sample(&mut rng)).collect());
        assert_eq!(
            integration_order(&noise, DeterministicSpec::Constant, 2, 0.05).unwrap(),
            0
        );

        let walk = random_walk(600, 78);
        assert_eq!(
            integration_order(&walk, DeterministicSpec::Constant, 2, 0.05).unwrap(),
            1
        );

        let twice = crate::series::cumulative_sum(&random_walk(600, 79));
        assert_eq!(
            integration_order(&twice, DeterministicSpec::Constant, 2, 0.05).unwrap(),
            2
        );
    }

    #[test]
    fn short_series_rejected() {
        let s = random_walk(20, 1);
        assert!(matches!(
            adf_test(&s, DeterministicSpec::Constant, 2, 0.05),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}
