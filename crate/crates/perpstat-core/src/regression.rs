//! Ordinary least squares with the summary statistics the hypothesis tests
//! need: residuals, R², joint F-statistic, Gaussian log-likelihood and the
//! Akaike / Schwarz / Hannan–Quinn criteria.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};
use crate::series::Series;

/// Relative tolerance on the R diagonal below which the design matrix is
/// declared rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Output of one least-squares fit. Coefficient order: intercept first when
/// requested, then the regressors in the order supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Series,
    pub r_squared: f64,
    /// Joint test of all non-intercept coefficients being zero.
    pub f_statistic: f64,
    pub f_pvalue: f64,
    /// Gaussian log-likelihood at the MLE variance `ssr / n`.
    pub log_likelihood: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub includes_intercept: bool,
}

impl RegressionFit {
    /// Two-sided t-test p-values for each coefficient.
    pub fn coef_pvalues(&self) -> Vec<f64> {
        let dof = (self.n_obs - self.n_params) as f64;
        let t_dist = StudentsT::new(0.0, 1.0, dof).expect("positive dof");
        self.coefficients
            .iter()
            .zip(&self.standard_errors)
            .map(|(b, se)| {
                if *se <= 0.0 {
                    if b.abs() > 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    2.0 * (1.0 - t_dist.cdf((b / se).abs()))
                }
            })
            .collect()
    }

    pub fn aic(&self) -> f64 {
        aic(self.log_likelihood, self.n_params)
    }
}

/// Least squares of `y` on the given regressor columns, optionally with an
/// intercept. Solved by QR decomposition; rank deficiency is detected from
/// the R diagonal.
pub fn ols(y: &Series, regressors: &[Vec<f64>], include_intercept: bool) -> Result<RegressionFit> {
    let n = y.len();
    for (index, col) in regressors.iter().enumerate() {
        if col.len() != n {
            return Err(Error::DimensionMismatch {
                index,
                need: n,
                got: col.len(),
            });
        }
    }
    let k = regressors.len() + usize::from(include_intercept);
    if k == 0 {
        return Err(Error::Underdetermined {
            n_obs: n,
            n_params: 0,
        });
    }
    if n <= k {
        return Err(Error::Underdetermined {
            n_obs: n,
            n_params: k,
        });
    }

    let x = DMatrix::from_fn(n, k, |i, j| {
        if include_intercept {
            if j == 0 {
                1.0
            } else {
                regressors[j - 1][i]
            }
        } else {
            regressors[j][i]
        }
    });
    let yv = DVector::from_column_slice(y.values());

    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    for i in 0..k {
        if r[(i, i)].abs() <= RANK_TOL * max_diag {
            return Err(Error::RankDeficient { pivot: i });
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { pivot: 0 })?;

    // (X'X)^-1 = R^-1 R^-T for the coefficient covariance.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(Error::RankDeficient { pivot: 0 })?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = &x * &beta;
    let resid: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();

    let nf = n as f64;
    let tss = if include_intercept {
        let mean = y.mean();
        y.values().iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        y.values().iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss <= 0.0 {
        0.0
    } else {
        (1.0 - ssr / tss).clamp(0.0, 1.0)
    };

    let sigma2_mle = (ssr / nf).max(1e-300);
    let log_likelihood =
        -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + sigma2_mle.ln() + 1.0);

    let n_slopes = k - usize::from(include_intercept);
    let (f_statistic, f_pvalue) = if n_slopes == 0 || n <= k {
        (0.0, 1.0)
    } else {
        let dof2 = (n - k) as f64;
        let num = (tss - ssr).max(0.0) / n_slopes as f64;
        let den = ssr / dof2;
        if den <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let f = num / den;
            let dist = FisherSnedecor::new(n_slopes as f64, dof2).expect("positive dof");
            (f, 1.0 - dist.cdf(f))
        }
    };

    let sigma2_unbiased = ssr / (n - k) as f64;
    let standard_errors = (0..k)
        .map(|j| (sigma2_unbiased * xtx_inv[(j, j)]).max(0.0).sqrt())
        .collect();

    Ok(RegressionFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        residuals: y.with_values(resid)?,
        r_squared,
        f_statistic,
        f_pvalue,
        log_likelihood,
        ssr,
        n_obs: n,
        n_params: k,
        includes_intercept: include_intercept,
    })
}

/// Akaike information criterion `2k - 2 logL`.
pub fn aic(log_likelihood: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

/// AIC divided by the number of observations, the convention of packaged
/// model-comparison tables.
pub fn aic_per_obs(log_likelihood: f64, k: usize, n: usize) -> f64 {
    aic(log_likelihood, k) / n as f64
}

/// Schwarz and Hannan–Quinn criteria:
/// `SIC = k ln(n) - 2 logL`, `HQC = 2k ln(ln(n)) - 2 logL`.
pub fn sic_hqc(log_likelihood: f64, k: usize, n: usize) -> (f64, f64) {
    let kf = k as f64;
    let nf = n as f64;
    let sic = kf * nf.ln() - 2.0 * log_likelihood;
    let hqc = 2.0 * kf * nf.ln().ln() - 2.0 * log_likelihood;
    (sic, hqc)
}

/// Per-observation variants of [`sic_hqc`].
pub fn sic_hqc_per_obs(log_likelihood: f64, k: usize, n: usize) -> (f64, f64) {
    let (sic, hqc) = sic_hqc(log_likelihood, k, n);
    (sic / n as f64, hqc / n as f64)
}
