//! Engle's LM test for autoregressive conditional heteroskedasticity:
//! regress squared residuals on their own lags and refer `n_eff * R²` to a
//! chi-square distribution.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::regression::{aic, ols};
use crate::series::Series;

/// Outcome of one LM test at a fixed lag order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchTestReport {
    pub lag_order: usize,
    /// `n_eff * R²` of the squared-residual regression.
    pub lm_statistic: f64,
    /// Chi-square(`lag_order`) upper-tail probability.
    pub lm_pvalue: f64,
    /// Joint F-statistic of the same regression.
    pub f_statistic: f64,
    pub f_pvalue: f64,
    /// p-value of the regression constant, mirroring published test tables.
    pub const_pvalue: f64,
    /// Slope estimates on the lagged squared residuals.
    pub alpha_estimates: Vec<f64>,
    pub significance_level: f64,
    pub reject_null: bool,
    pub n_effective: usize,
}

fn check_inputs(residuals: &Series, lag_order: usize) -> Result<()> {
    if lag_order == 0 {
        return Err(Error::LagTooLarge {
            max_lag: 0,
            len: residuals.len(),
        });
    }
    if residuals.len() <= lag_order + 10 {
        return Err(Error::SeriesTooShort {
            need: lag_order + 11,
            got: residuals.len(),
        });
    }
    if residuals.variance() <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok(())
}

/// Build the squared-residual lag regression e²_t ~ const + e²_{t-1..t-p}
/// over observations `start..n` and fit it.
fn squared_lag_fit(
    residuals: &Series,
    lag_order: usize,
    start: usize,
) -> Result<crate::regression::RegressionFit> {
    let sq: Vec<f64> = residuals.values().iter().map(|e| e * e).collect();
    let n = sq.len();
    let target = residuals.skip(start)?.with_values(sq[start..].to_vec())?;
    let lags: Vec<Vec<f64>> = (1..=lag_order)
        .map(|j| (start..n).map(|t| sq[t - j]).collect())
        .collect();
    ols(&target, &lags, true)
}

/// Engle's ARCH LM test on a demeaned residual series.
pub fn arch_lm_test(residuals: &Series, lag_order: usize, level: f64) -> Result<ArchTestReport> {
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(Error::InvalidLevel { level });
    }
    check_inputs(residuals, lag_order)?;

    let fit = squared_lag_fit(residuals, lag_order, lag_order)?;
    let n_effective = fit.n_obs;
    let lm_statistic = n_effective as f64 * fit.r_squared;
    let chi = ChiSquared::new(lag_order as f64).expect("positive dof");
    let lm_pvalue = 1.0 - chi.cdf(lm_statistic);
    let const_pvalue = fit.coef_pvalues()[0];

    Ok(ArchTestReport {
        lag_order,
        lm_statistic,
        lm_pvalue,
        f_statistic: fit.f_statistic,
        f_pvalue: fit.f_pvalue,
        const_pvalue,
        alpha_estimates: fit.coefficients[1..].to_vec(),
        significance_level: level,
        reject_null: lm_pvalue < level,
        n_effective,
    })
}

/// Pick the lag order in `1..=max_lag` minimizing AIC of the squared-residual
/// regression. All candidates are fit on the same `max_lag`-trimmed window so
/// the criteria are comparable; ties go to the smaller lag.
pub fn select_arch_lag(residuals: &Series, max_lag: usize) -> Result<usize> {
    check_inputs(residuals, max_lag.max(1))?;
    let mut best = (1usize, f64::INFINITY);
    for p in 1..=max_lag {
        let fit = squared_lag_fit(residuals, p, max_lag)?;
        let crit = aic(fit.log_likelihood, fit.n_params);
        if crit < best.1 - 1e-12 {
            best = (p, crit);
        }
    }
    Ok(best.0)
}
