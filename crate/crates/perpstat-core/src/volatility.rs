//! Maximum-likelihood estimation, comparison and forecasting of the
//! GARCH family under Gaussian innovations: GARCH(1,1), TARCH (GJR),
//! EGARCH(1,1), PARCH(1,1,1) and IGARCH(1,1).
//!
//! Estimation maximizes the Gaussian log-likelihood
//! `sum_t -(ln 2π + ln σ²_t + e²_t/σ²_t)/2` over each family's admissible
//! region, using unconstrained reparametrizations (log for positive scale,
//! logistic for persistence sums) driven by a simplex search plus BFGS
//! refinement with analytic gradients.

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::optimize::{bfgs, nelder_mead};
use crate::regression::{aic, aic_per_obs, sic_hqc, sic_hqc_per_obs};
use crate::series::Series;

const LN_2PI: f64 = 1.8378770664093453;
/// E|Z| for standard normal innovations.
const EXPECTED_ABS_Z: f64 = 0.7978845608028654; // sqrt(2/pi)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Garch,
    Tarch,
    Egarch,
    Parch,
    Igarch,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Garch,
        Family::Tarch,
        Family::Egarch,
        Family::Parch,
        Family::Igarch,
    ];

    /// Table label, e.g. `EGARCH(1,1)`.
    pub fn label(&self) -> &'static str {
        match self {
            Family::Garch => "GARCH(1,1)",
            Family::Tarch => "TARCH",
            Family::Egarch => "EGARCH(1,1)",
            Family::Parch => "PARCH(1,1,1)",
            Family::Igarch => "IGARCH(1,1)",
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Garch => "garch",
            Family::Tarch => "tarch",
            Family::Egarch => "egarch",
            Family::Parch => "parch",
            Family::Igarch => "igarch",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "garch" => Ok(Family::Garch),
            "tarch" => Ok(Family::Tarch),
            "egarch" => Ok(Family::Egarch),
            "parch" => Ok(Family::Parch),
            "igarch" => Ok(Family::Igarch),
            other => Err(Error::InvalidParams {
                family: other.to_string(),
                reason: "unknown model family".into(),
            }),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which shock term the EGARCH log-variance recursion uses. The standard
/// (Nelson) form enters the level of the standardized shock; the squared
/// variant is kept behind this switch for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgarchVariant {
    #[default]
    Nelson,
    SquaredShock,
}

/// Parameter vector of one family. IGARCH stores only `omega` and `alpha`;
/// its `beta` is `1 - alpha` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyParams {
    Garch { omega: f64, alpha: f64, beta: f64 },
    Tarch { omega: f64, alpha: f64, gamma: f64, beta: f64 },
    Egarch { omega: f64, alpha: f64, gamma: f64, beta: f64 },
    Parch { omega: f64, alpha: f64, gamma: f64, beta: f64, delta: f64 },
    Igarch { omega: f64, alpha: f64 },
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::Garch { .. } => Family::Garch,
            FamilyParams::Tarch { .. } => Family::Tarch,
            FamilyParams::Egarch { .. } => Family::Egarch,
            FamilyParams::Parch { .. } => Family::Parch,
            FamilyParams::Igarch { .. } => Family::Igarch,
        }
    }

    /// Named view including derived entries (IGARCH beta).
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            FamilyParams::Garch { omega, alpha, beta } => {
                vec![("omega", omega), ("alpha1", alpha), ("beta1", beta)]
            }
            FamilyParams::Tarch { omega, alpha, gamma, beta } => vec![
                ("omega", omega),
                ("alpha1", alpha),
                ("gamma1", gamma),
                ("beta1", beta),
            ],
            FamilyParams::Egarch { omega, alpha, gamma, beta } => vec![
                ("omega", omega),
                ("alpha1", alpha),
                ("gamma1", gamma),
                ("beta1", beta),
            ],
            FamilyParams::Parch { omega, alpha, gamma, beta, delta } => vec![
                ("omega", omega),
                ("alpha1", alpha),
                ("gamma1", gamma),
                ("beta1", beta),
                ("delta", delta),
            ],
            FamilyParams::Igarch { omega, alpha } => {
                vec![("omega", omega), ("alpha1", alpha), ("beta1", 1.0 - alpha)]
            }
        }
    }

    /// Parameter values in canonical order.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            FamilyParams::Garch { omega, alpha, beta } => vec![omega, alpha, beta],
            FamilyParams::Tarch { omega, alpha, gamma, beta } => vec![omega, alpha, gamma, beta],
            FamilyParams::Egarch { omega, alpha, gamma, beta } => vec![omega, alpha, gamma, beta],
            FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
                vec![omega, alpha, gamma, beta, delta]
            }
            FamilyParams::Igarch { omega, alpha } => vec![omega, alpha],
        }
    }

    /// Rebuild from canonical order (inverse of [`FamilyParams::to_vec`]).
    pub fn from_vec(family: Family, p: &[f64]) -> FamilyParams {
        match family {
            Family::Garch => FamilyParams::Garch {
                omega: p[0],
                alpha: p[1],
                beta: p[2],
            },
            Family::Tarch => FamilyParams::Tarch {
                omega: p[0],
                alpha: p[1],
                gamma: p[2],
                beta: p[3],
            },
            Family::Egarch => FamilyParams::Egarch {
                omega: p[0],
                alpha: p[1],
                gamma: p[2],
                beta: p[3],
            },
            Family::Parch => FamilyParams::Parch {
                omega: p[0],
                alpha: p[1],
                gamma: p[2],
                beta: p[3],
                delta: p[4],
            },
            Family::Igarch => FamilyParams::Igarch {
                omega: p[0],
                alpha: p[1],
            },
        }
    }

    /// Check the family's admissible region (positivity and stationarity
    /// constraints; IGARCH keeps only the unit-persistence requirement).
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FamilyParams::Garch { omega, alpha, beta } => {
                omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0
            }
            FamilyParams::Tarch { omega, alpha, gamma, beta } => {
                omega > 0.0
                    && alpha >= 0.0
                    && gamma >= 0.0
                    && beta >= 0.0
                    && alpha + 0.5 * gamma + beta < 1.0
            }
            FamilyParams::Egarch { beta, .. } => beta.abs() < 1.0,
            FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
                omega > 0.0
                    && alpha >= 0.0
                    && beta >= 0.0
                    && alpha + beta < 1.0
                    && gamma.abs() < 1.0
                    && delta > 0.0
            }
            FamilyParams::Igarch { omega, alpha } => omega > 0.0 && alpha > 0.0 && alpha < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams {
                family: self.family().name().to_string(),
                reason: "outside the admissible region".into(),
            })
        }
    }
}

/// Raw and per-observation information criteria of one fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub aic: f64,
    pub sic: f64,
    pub hqc: f64,
    pub aic_per_obs: f64,
    pub sic_per_obs: f64,
    pub hqc_per_obs: f64,
}

impl Criteria {
    pub fn from_loglik(log_likelihood: f64, k: usize, n: usize) -> Criteria {
        let (sic, hqc) = sic_hqc(log_likelihood, k, n);
        let (sic_po, hqc_po) = sic_hqc_per_obs(log_likelihood, k, n);
        Criteria {
            aic: aic(log_likelihood, k),
            sic,
            hqc,
            aic_per_obs: aic_per_obs(log_likelihood, k, n),
            sic_per_obs: sic_po,
            hqc_per_obs: hqc_po,
        }
    }
}

/// A fitted volatility model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityFit {
    pub family: Family,
    pub params: FamilyParams,
    pub egarch_variant: EgarchVariant,
    pub log_likelihood: f64,
    pub criteria: Criteria,
    /// σ²_t along the fitted sample.
    pub conditional_variance: Series,
    pub converged: bool,
    pub iterations: usize,
    pub n_obs: usize,
    /// Number of estimated parameters (model parameters plus the mean when
    /// the series was demeaned internally).
    pub n_params: usize,
    /// Mean subtracted from the input before fitting.
    pub mean: f64,
    /// Final demeaned observation, needed to start forecasts.
    pub last_residual: f64,
}

/// Variance forecast from the end of a fitted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceForecast {
    pub horizon: usize,
    pub variances: Vec<f64>,
    pub origin_timestamp: DateTime<Utc>,
}

/// Estimation controls. Tolerance is on the log-likelihood; the iteration
/// cap applies to each optimizer stage.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub demean: bool,
    pub egarch_variant: EgarchVariant,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seeds the jitter of restart attempts after a failed convergence.
    pub restart_seed: u64,
    pub max_restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            demean: true,
            egarch_variant: EgarchVariant::Nelson,
            tolerance: 1e-8,
            max_iterations: 2000,
            restart_seed: 0,
            max_restarts: 2,
        }
    }
}

// ---------------------------------------------------------------------------
// Likelihood machinery in natural parameter space.
// ---------------------------------------------------------------------------

fn dim(family: Family) -> usize {
    match family {
        Family::Garch => 3,
        Family::Tarch => 4,
        Family::Egarch => 4,
        Family::Parch => 5,
        Family::Igarch => 2,
    }
}

/// Conditional variance path σ²_t. `init_var` seeds the recursion at t = 0.
/// Returns an error when the path leaves the positive, finite region.
pub fn variance_path(
    params: &FamilyParams,
    variant: EgarchVariant,
    residuals: &[f64],
    init_var: f64,
) -> Result<Vec<f64>> {
    variance_path_opt(params, variant, residuals, init_var).ok_or_else(|| Error::InvalidParams {
        family: params.family().name().to_string(),
        reason: "conditional variance path left the positive region".into(),
    })
}

fn variance_path_opt(
    params: &FamilyParams,
    variant: EgarchVariant,
    e: &[f64],
    init_var: f64,
) -> Option<Vec<f64>> {
    let n = e.len();
    if n == 0 || init_var <= 0.0 {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    match *params {
        FamilyParams::Garch { omega, alpha, beta } => {
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    var = omega + alpha * e[t - 1] * e[t - 1] + beta * var;
                }
                if !(var.is_finite() && var > 0.0) {
                    return None;
                }
                out.push(var);
            }
        }
        FamilyParams::Tarch { omega, alpha, gamma, beta } => {
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    let shock = e[t - 1] * e[t - 1];
                    let asym = if e[t - 1] < 0.0 { gamma } else { 0.0 };
                    var = omega + (alpha + asym) * shock + beta * var;
                }
                if !(var.is_finite() && var > 0.0) {
                    return None;
                }
                out.push(var);
            }
        }
        FamilyParams::Egarch { omega, alpha, gamma, beta } => {
            let mut h = init_var.ln();
            for t in 0..n {
                if t > 0 {
                    let z = e[t - 1] * (-0.5 * h).exp();
                    let shock = match variant {
                        EgarchVariant::Nelson => alpha * z,
                        EgarchVariant::SquaredShock => alpha * z * z,
                    };
                    h = omega + shock + gamma * (z.abs() - EXPECTED_ABS_Z) + beta * h;
                }
                if !h.is_finite() || h.abs() > 300.0 {
                    return None;
                }
                out.push(h.exp());
            }
        }
        FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
            let mut s = init_var.powf(0.5 * delta);
            let inv = 2.0 / delta;
            for t in 0..n {
                if t > 0 {
                    let g = e[t - 1].abs() - gamma * e[t - 1];
                    s = omega + alpha * g.powf(delta) + beta * s;
                }
                if !(s.is_finite() && s > 0.0) {
                    return None;
                }
                let var = s.powf(inv);
                if !(var.is_finite() && var > 0.0) {
                    return None;
                }
                out.push(var);
            }
        }
        FamilyParams::Igarch { omega, alpha } => {
            let beta = 1.0 - alpha;
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    var = omega + alpha * e[t - 1] * e[t - 1] + beta * var;
                }
                if !(var.is_finite() && var > 0.0) {
                    return None;
                }
                out.push(var);
            }
        }
    }
    Some(out)
}

/// Negative Gaussian log-likelihood; `+inf` outside the admissible region.
pub fn neg_loglik(
    params: &FamilyParams,
    variant: EgarchVariant,
    residuals: &[f64],
    init_var: f64,
) -> f64 {
    match variance_path_opt(params, variant, residuals, init_var) {
        None => f64::INFINITY,
        Some(path) => {
            let mut acc = 0.0;
            for (e, var) in residuals.iter().zip(&path) {
                acc += LN_2PI + var.ln() + e * e / var;
            }
            let v = 0.5 * acc;
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Analytic gradient of [`neg_loglik`] in natural parameter space, by
/// forward accumulation of the variance-path sensitivities.
pub fn grad_neg_loglik(
    params: &FamilyParams,
    variant: EgarchVariant,
    e: &[f64],
    init_var: f64,
) -> Vec<f64> {
    let n = e.len();
    match *params {
        FamilyParams::Garch { omega, alpha, beta } => {
            let mut g = [0.0; 3];
            let mut d = [0.0; 3];
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    let shock = e[t - 1] * e[t - 1];
                    d = [
                        1.0 + beta * d[0],
                        shock + beta * d[1],
                        var + beta * d[2],
                    ];
                    var = omega + alpha * shock + beta * var;
                }
                let w = 0.5 * (var - e[t] * e[t]) / (var * var);
                for (gi, di) in g.iter_mut().zip(&d) {
                    *gi += w * di;
                }
            }
            g.to_vec()
        }
        FamilyParams::Tarch { omega, alpha, gamma, beta } => {
            let mut g = [0.0; 4];
            let mut d = [0.0; 4];
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    let shock = e[t - 1] * e[t - 1];
                    let ind = if e[t - 1] < 0.0 { 1.0 } else { 0.0 };
                    d = [
                        1.0 + beta * d[0],
                        shock + beta * d[1],
                        ind * shock + beta * d[2],
                        var + beta * d[3],
                    ];
                    var = omega + (alpha + gamma * ind) * shock + beta * var;
                }
                let w = 0.5 * (var - e[t] * e[t]) / (var * var);
                for (gi, di) in g.iter_mut().zip(&d) {
                    *gi += w * di;
                }
            }
            g.to_vec()
        }
        FamilyParams::Egarch { omega, alpha, gamma, beta } => {
            let mut g = [0.0; 4];
            let mut d = [0.0; 4];
            let mut h = init_var.ln();
            for t in 0..n {
                if t > 0 {
                    let z = e[t - 1] * (-0.5 * h).exp();
                    let (shock, dshock_dh) = match variant {
                        EgarchVariant::Nelson => (alpha * z, -0.5 * alpha * z),
                        EgarchVariant::SquaredShock => (alpha * z * z, -alpha * z * z),
                    };
                    let factor = beta + dshock_dh - 0.5 * gamma * z.abs();
                    let direct_alpha = match variant {
                        EgarchVariant::Nelson => z,
                        EgarchVariant::SquaredShock => z * z,
                    };
                    d = [
                        1.0 + factor * d[0],
                        direct_alpha + factor * d[1],
                        (z.abs() - EXPECTED_ABS_Z) + factor * d[2],
                        h + factor * d[3],
                    ];
                    h = omega + shock + gamma * (z.abs() - EXPECTED_ABS_Z) + beta * h;
                }
                let w = 0.5 * (1.0 - e[t] * e[t] * (-h).exp());
                for (gi, di) in g.iter_mut().zip(&d) {
                    *gi += w * di;
                }
            }
            g.to_vec()
        }
        FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
            let mut g = [0.0; 5];
            let mut s = init_var.powf(0.5 * delta);
            // d s_0 / d delta; other partials of s_0 are zero.
            let mut d = [0.0, 0.0, 0.0, 0.0, 0.5 * s * init_var.ln()];
            for t in 0..n {
                if t > 0 {
                    let shock = e[t - 1].abs() - gamma * e[t - 1];
                    let (pow, dpow_dgamma, dpow_ddelta) = if shock > 0.0 {
                        let p = shock.powf(delta);
                        (
                            p,
                            delta * shock.powf(delta - 1.0) * (-e[t - 1]),
                            p * shock.ln(),
                        )
                    } else {
                        (0.0, 0.0, 0.0)
                    };
                    d = [
                        1.0 + beta * d[0],
                        pow + beta * d[1],
                        alpha * dpow_dgamma + beta * d[2],
                        s + beta * d[3],
                        alpha * dpow_ddelta + beta * d[4],
                    ];
                    s = omega + alpha * pow + beta * s;
                }
                let h = (2.0 / delta) * s.ln();
                let w = 0.5 * (1.0 - e[t] * e[t] * (-h).exp());
                let common = (2.0 / delta) / s;
                g[0] += w * common * d[0];
                g[1] += w * common * d[1];
                g[2] += w * common * d[2];
                g[3] += w * common * d[3];
                g[4] += w * (common * d[4] - (2.0 / (delta * delta)) * s.ln());
            }
            g.to_vec()
        }
        FamilyParams::Igarch { omega, alpha } => {
            let beta = 1.0 - alpha;
            let mut g = [0.0; 2];
            let mut d = [0.0; 2];
            let mut var = init_var;
            for t in 0..n {
                if t > 0 {
                    let shock = e[t - 1] * e[t - 1];
                    d = [
                        1.0 + beta * d[0],
                        shock - var + beta * d[1],
                    ];
                    var = omega + alpha * shock + beta * var;
                }
                let w = 0.5 * (var - e[t] * e[t]) / (var * var);
                for (gi, di) in g.iter_mut().zip(&d) {
                    *gi += w * di;
                }
            }
            g.to_vec()
        }
    }
}

// ---------------------------------------------------------------------------
// Unconstrained reparametrization.
// ---------------------------------------------------------------------------

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-8, 1.0 - 1e-8);
    (p / (1.0 - p)).ln()
}

fn softmax3(a: f64, b: f64) -> (f64, f64, f64) {
    let m = a.max(b).max(0.0);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let ec = (-m).exp();
    let sum = ea + eb + ec;
    (ea / sum, eb / sum, ec / sum)
}

fn to_natural(family: Family, u: &[f64]) -> Vec<f64> {
    match family {
        Family::Garch => {
            let omega = u[0].exp();
            let s = sigmoid(u[1]);
            let f = sigmoid(u[2]);
            vec![omega, s * f, s * (1.0 - f)]
        }
        Family::Tarch => {
            let omega = u[0].exp();
            let s = sigmoid(u[1]);
            let (wa, wg, wb) = softmax3(u[2], u[3]);
            vec![omega, s * wa, 2.0 * s * wg, s * wb]
        }
        Family::Egarch => vec![u[0], u[1], u[2], u[3].tanh()],
        Family::Parch => {
            let omega = u[0].exp();
            let s = sigmoid(u[1]);
            let f = sigmoid(u[2]);
            vec![omega, s * f, u[3].tanh(), s * (1.0 - f), u[4].exp()]
        }
        Family::Igarch => vec![u[0].exp(), sigmoid(u[1])],
    }
}

fn to_unconstrained(family: Family, p: &[f64]) -> Vec<f64> {
    match family {
        Family::Garch => {
            let s = (p[1] + p[2]).clamp(1e-8, 1.0 - 1e-8);
            vec![p[0].max(1e-300).ln(), logit(s), logit(p[1] / s)]
        }
        Family::Tarch => {
            let s = (p[1] + 0.5 * p[2] + p[3]).clamp(1e-8, 1.0 - 1e-8);
            let wa = (p[1] / s).clamp(1e-8, 1.0);
            let wg = (0.5 * p[2] / s).clamp(1e-8, 1.0);
            let wb = (p[3] / s).clamp(1e-8, 1.0);
            vec![p[0].max(1e-300).ln(), logit(s), (wa / wb).ln(), (wg / wb).ln()]
        }
        Family::Egarch => vec![p[0], p[1], p[2], p[3].clamp(-0.999_999, 0.999_999).atanh()],
        Family::Parch => {
            let s = (p[1] + p[3]).clamp(1e-8, 1.0 - 1e-8);
            vec![
                p[0].max(1e-300).ln(),
                logit(s),
                logit(p[1] / s),
                p[2].clamp(-0.999_999, 0.999_999).atanh(),
                p[4].max(1e-300).ln(),
            ]
        }
        Family::Igarch => vec![p[0].max(1e-300).ln(), logit(p[1])],
    }
}

/// Jacobian d(natural)/d(unconstrained), row = natural index.
fn jacobian(family: Family, u: &[f64]) -> Vec<Vec<f64>> {
    let k = dim(family);
    let mut j = vec![vec![0.0; k]; k];
    match family {
        Family::Garch => {
            let s = sigmoid(u[1]);
            let f = sigmoid(u[2]);
            j[0][0] = u[0].exp();
            j[1][1] = s * (1.0 - s) * f;
            j[1][2] = s * f * (1.0 - f);
            j[2][1] = s * (1.0 - s) * (1.0 - f);
            j[2][2] = -s * f * (1.0 - f);
        }
        Family::Tarch => {
            let s = sigmoid(u[1]);
            let ds = s * (1.0 - s);
            let (wa, wg, wb) = softmax3(u[2], u[3]);
            j[0][0] = u[0].exp();
            // alpha = s*wa, gamma = 2 s wg, beta = s*wb
            j[1][1] = ds * wa;
            j[1][2] = s * wa * (1.0 - wa);
            j[1][3] = -s * wa * wg;
            j[2][1] = 2.0 * ds * wg;
            j[2][2] = -2.0 * s * wg * wa;
            j[2][3] = 2.0 * s * wg * (1.0 - wg);
            j[3][1] = ds * wb;
            j[3][2] = -s * wb * wa;
            j[3][3] = -s * wb * wg;
        }
        Family::Egarch => {
            j[0][0] = 1.0;
            j[1][1] = 1.0;
            j[2][2] = 1.0;
            let t = u[3].tanh();
            j[3][3] = 1.0 - t * t;
        }
        Family::Parch => {
            let s = sigmoid(u[1]);
            let f = sigmoid(u[2]);
            j[0][0] = u[0].exp();
            j[1][1] = s * (1.0 - s) * f;
            j[1][2] = s * f * (1.0 - f);
            let t = u[3].tanh();
            j[2][3] = 1.0 - t * t;
            j[3][1] = s * (1.0 - s) * (1.0 - f);
            j[3][2] = -s * f * (1.0 - f);
            j[4][4] = u[4].exp();
        }
        Family::Igarch => {
            j[0][0] = u[0].exp();
            let a = sigmoid(u[1]);
            j[1][1] = a * (1.0 - a);
        }
    }
    j
}

fn initial_params(family: Family, sample_var: f64) -> Vec<f64> {
    let v = sample_var.max(1e-12);
    match family {
        Family::Garch => vec![0.05 * v, 0.05, 0.90],
        Family::Tarch => vec![0.05 * v, 0.03, 0.04, 0.90],
        Family::Egarch => vec![0.1 * v.ln(), 0.05, 0.2, 0.9],
        Family::Parch => vec![0.05 * v, 0.05, 0.0, 0.90, 2.0],
        Family::Igarch => vec![0.05 * v, 0.2],
    }
}

// ---------------------------------------------------------------------------
// Fitting, comparison, forecasting, simulation.
// ---------------------------------------------------------------------------

/// Fit one family with default options (demeaned input, Nelson EGARCH).
pub fn fit(returns: &Series, family: Family) -> Result<VolatilityFit> {
    fit_with(returns, family, &FitOptions::default())
}

pub fn fit_with(returns: &Series, family: Family, opts: &FitOptions) -> Result<VolatilityFit> {
    if returns.len() < 200 {
        return Err(Error::SeriesTooShort {
            need: 200,
            got: returns.len(),
        });
    }
    let mean = if opts.demean { returns.mean() } else { 0.0 };
    let e: Vec<f64> = returns.values().iter().map(|v| v - mean).collect();
    let n = e.len();
    let init_var = e.iter().map(|x| x * x).sum::<f64>() / (n - 1) as f64;
    if init_var <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let variant = opts.egarch_variant;

    let objective = |u: &[f64]| {
        let p = FamilyParams::from_vec(family, &to_natural(family, u));
        neg_loglik(&p, variant, &e, init_var)
    };
    let gradient = |u: &[f64]| {
        let nat = to_natural(family, u);
        let p = FamilyParams::from_vec(family, &nat);
        let gn = grad_neg_loglik(&p, variant, &e, init_var);
        let j = jacobian(family, u);
        (0..gn.len())
            .map(|col| (0..gn.len()).map(|row| j[row][col] * gn[row]).sum())
            .collect::<Vec<f64>>()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.restart_seed);
    let jitter_dist = Normal::new(0.0, 0.5).expect("valid normal");
    let base_u = to_unconstrained(family, &initial_params(family, init_var));

    // Every attempt runs to completion and the best converged optimum wins;
    // restarts jitter the start point to step off likelihood ridges.
    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for attempt in 0..=opts.max_restarts {
        let mut u0 = base_u.clone();
        if attempt > 0 {
            for v in u0.iter_mut() {
                *v += jitter_dist.sample(&mut rng);
            }
        }
        let nm = nelder_mead(
            objective,
            &u0,
            0.25,
            opts.tolerance.max(1e-10),
            opts.max_iterations / 2,
        );
        let qn = bfgs(
            objective,
            gradient,
            &nm.x,
            opts.tolerance,
            opts.max_iterations / 2,
        );
        let iterations = nm.iterations + qn.iterations;
        let converged = qn.converged && qn.f.is_finite();
        let better = match &best {
            None => true,
            Some((_, f, _, conv)) => match (converged, conv) {
                (true, false) => true,
                (false, true) => false,
                _ => qn.f < *f - 1e-12,
            },
        };
        if better {
            best = Some((qn.x, qn.f, iterations, converged));
        }
    }

    let (u, negll, iterations, converged) = best.expect("at least one optimization attempt");
    let nat = to_natural(family, &u);
    let params = FamilyParams::from_vec(family, &nat);
    let path = variance_path(&params, variant, &e, init_var)?;
    let log_likelihood = -negll;
    let n_params = dim(family) + usize::from(opts.demean);

    Ok(VolatilityFit {
        family,
        params,
        egarch_variant: variant,
        log_likelihood,
        criteria: Criteria::from_loglik(log_likelihood, n_params, n),
        conditional_variance: returns.with_values(path)?,
        converged,
        iterations,
        n_obs: n,
        n_params,
        mean,
        last_residual: e[n - 1],
    })
}

/// Fits of several families ranked by AIC (ascending). Non-converged fits
/// are excluded from the ranking but reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub ranked: Vec<VolatilityFit>,
    pub excluded: Vec<VolatilityFit>,
    /// Family order by SIC and HQC over the converged fits.
    pub sic_order: Vec<Family>,
    pub hqc_order: Vec<Family>,
}

impl ModelComparison {
    pub fn best(&self) -> Option<&VolatilityFit> {
        self.ranked.first()
    }
}

pub fn compare(returns: &Series, families: &[Family]) -> Result<ModelComparison> {
    compare_with(returns, families, &FitOptions::default())
}

pub fn compare_with(
    returns: &Series,
    families: &[Family],
    opts: &FitOptions,
) -> Result<ModelComparison> {
    if families.len() < 2 {
        return Err(Error::InvalidParams {
            family: "comparison".into(),
            reason: "need at least two families to compare".into(),
        });
    }
    let fits: Vec<Result<VolatilityFit>> = families
        .par_iter()
        .map(|family| fit_with(returns, *family, opts))
        .collect();

    let mut ranked = Vec::new();
    let mut excluded = Vec::new();
    for fit in fits {
        let fit = fit?;
        if fit.converged {
            ranked.push(fit);
        } else {
            excluded.push(fit);
        }
    }
    ranked.sort_by(|a, b| a.criteria.aic.total_cmp(&b.criteria.aic));
    let order_by = |key: fn(&VolatilityFit) -> f64| {
        let mut v: Vec<&VolatilityFit> = ranked.iter().collect();
        v.sort_by(|a, b| key(a).total_cmp(&key(b)));
        v.into_iter().map(|f| f.family).collect::<Vec<Family>>()
    };
    let sic_order = order_by(|f| f.criteria.sic);
    let hqc_order = order_by(|f| f.criteria.hqc);
    Ok(ModelComparison {
        ranked,
        excluded,
        sic_order,
        hqc_order,
    })
}

/// `E[(|Z| - gamma Z)^delta]` for standard normal Z.
fn parch_shock_expectation(gamma: f64, delta: f64) -> f64 {
    let abs_moment =
        2.0_f64.powf(0.5 * delta) * gamma_fn((delta + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    0.5 * ((1.0 - gamma).powf(delta) + (1.0 + gamma).powf(delta)) * abs_moment
}

/// Iterate the fitted recursion forward with future shocks replaced by their
/// conditional expectations.
pub fn forecast(fit: &VolatilityFit, horizon: usize) -> Result<VarianceForecast> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if horizon == 0 {
        return Err(Error::InvalidParams {
            family: fit.family.name().to_string(),
            reason: "horizon must be at least 1".into(),
        });
    }
    let last_var = *fit
        .conditional_variance
        .values()
        .last()
        .expect("fitted path is non-empty");
    let e_last = fit.last_residual;
    let mut variances = Vec::with_capacity(horizon);

    match fit.params {
        FamilyParams::Garch { omega, alpha, beta } => {
            let mut v = omega + alpha * e_last * e_last + beta * last_var;
            for _ in 0..horizon {
                variances.push(v);
                v = omega + (alpha + beta) * v;
            }
        }
        FamilyParams::Tarch { omega, alpha, gamma, beta } => {
            let asym = if e_last < 0.0 { gamma } else { 0.0 };
            let mut v = omega + (alpha + asym) * e_last * e_last + beta * last_var;
            let persistence = alpha + 0.5 * gamma + beta;
            for _ in 0..horizon {
                variances.push(v);
                v = omega + persistence * v;
            }
        }
        FamilyParams::Egarch { omega, alpha, gamma, beta } => {
            let mut h = last_var.ln();
            let z = e_last / last_var.sqrt();
            let shock = match fit.egarch_variant {
                EgarchVariant::Nelson => alpha * z,
                EgarchVariant::SquaredShock => alpha * z * z,
            };
            // One-step: realized shock. Beyond: E[Z] = 0, E[|Z|] = sqrt(2/pi),
            // E[Z²] = 1.
            h = omega + shock + gamma * (z.abs() - EXPECTED_ABS_Z) + beta * h;
            let expected_shock = match fit.egarch_variant {
                EgarchVariant::Nelson => 0.0,
                EgarchVariant::SquaredShock => alpha,
            };
            for _ in 0..horizon {
                variances.push(h.exp());
                h = omega + expected_shock + beta * h;
            }
        }
        FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
            let g = e_last.abs() - gamma * e_last;
            let mut s = omega + alpha * g.powf(delta) + beta * last_var.powf(0.5 * delta);
            let kappa = parch_shock_expectation(gamma, delta);
            for _ in 0..horizon {
                variances.push(s.powf(2.0 / delta));
                s = omega + (alpha * kappa + beta) * s;
            }
        }
        FamilyParams::Igarch { omega, alpha } => {
            let mut v = omega + alpha * e_last * e_last + (1.0 - alpha) * last_var;
            for _ in 0..horizon {
                variances.push(v);
                v += omega;
            }
        }
    }

    Ok(VarianceForecast {
        horizon,
        variances,
        origin_timestamp: fit.conditional_variance.end(),
    })
}

/// Simulate `r_t = σ_t w_t` with Gaussian `w_t` and the family's recursion,
/// deterministically from `seed`. A burn-in of 500 draws is discarded.
pub fn simulate(params: &FamilyParams, n: usize, seed: u64) -> Result<Series> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams {
            family: params.family().name().to_string(),
            reason: "n must be at least 1".into(),
        });
    }
    const BURN_IN: usize = 500;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let total = n + BURN_IN;
    let mut values = Vec::with_capacity(total);

    match *params {
        FamilyParams::Garch { omega, alpha, beta } => {
            let persistence = alpha + beta;
            let mut var = if persistence < 1.0 && omega > 0.0 {
                omega / (1.0 - persistence)
            } else {
                1.0
            };
            for t in 0..total {
                if t > 0 {
                    let prev = values[t - 1];
                    var = omega + alpha * prev * prev + beta * var;
                }
                values.push(var.sqrt() * normal.sample(&mut rng));
            }
        }
        FamilyParams::Tarch { omega, alpha, gamma, beta } => {
            let persistence = alpha + 0.5 * gamma + beta;
            let mut var = if persistence < 1.0 {
                omega / (1.0 - persistence)
            } else {
                1.0
            };
            for t in 0..total {
                if t > 0 {
                    let prev: f64 = values[t - 1];
                    let asym = if prev < 0.0 { gamma } else { 0.0 };
                    var = omega + (alpha + asym) * prev * prev + beta * var;
                }
                values.push(var.sqrt() * normal.sample(&mut rng));
            }
        }
        FamilyParams::Egarch { omega, alpha, gamma, beta } => {
            let mut h = omega / (1.0 - beta);
            let mut z_prev = 0.0;
            for t in 0..total {
                if t > 0 {
                    h = omega + alpha * z_prev + gamma * (z_prev.abs() - EXPECTED_ABS_Z) + beta * h;
                }
                let z: f64 = normal.sample(&mut rng);
                values.push((0.5 * h).exp() * z);
                z_prev = z;
            }
        }
        FamilyParams::Parch { omega, alpha, gamma, beta, delta } => {
            let kappa = parch_shock_expectation(gamma, delta);
            let denom = 1.0 - alpha * kappa - beta;
            let mut s = if denom > 0.0 { omega / denom } else { 1.0 };
            for t in 0..total {
                if t > 0 {
                    let prev: f64 = values[t - 1];
                    let g = prev.abs() - gamma * prev;
                    s = omega + alpha * g.powf(delta) + beta * s;
                }
                values.push(s.powf(1.0 / delta) * normal.sample(&mut rng));
            }
        }
        FamilyParams::Igarch { omega, alpha } => {
            let mut var = 1.0;
            for t in 0..total {
                if t > 0 {
                    let prev = values[t - 1];
                    var = omega + alpha * prev * prev + (1.0 - alpha) * var;
                }
                values.push(var.sqrt() * normal.sample(&mut rng));
            }
        }
    }

    let tail = values.split_off(BURN_IN);
    let start = chrono::TimeZone::with_ymd_and_hms(&Utc, 2016, 6, 4, 4, 0, 0).unwrap();
    Series::from_start(start, crate::series::FUNDING_PERIOD_SECS, tail)
}
