//! Python bindings for the funding and econometrics library: the `perpstat`
//! extension module exposes the series container, the funding engine, the
//! hypothesis tests and the volatility models.

use std::collections::BTreeMap;
use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use perpstat_core::adf::{self, DeterministicSpec};
use perpstat_core::arch;
use perpstat_core::config::PipelineConfig;
use perpstat_core::error::Error;
use perpstat_core::funding;
use perpstat_core::granger;
use perpstat_core::ingest::{self, FillPolicy};
use perpstat_core::pipeline;
use perpstat_core::series;
use perpstat_core::volatility::{self, EgarchVariant, Family, FamilyParams, FitOptions};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::ParseError { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_fill(fill: &str) -> PyResult<FillPolicy> {
    match fill {
        "reject" => Ok(FillPolicy::Reject),
        "previous" => Ok(FillPolicy::Previous),
        other => Err(PyValueError::new_err(format!(
            "unknown fill policy `{other}`"
        ))),
    }
}

fn parse_spec(spec: &str) -> PyResult<DeterministicSpec> {
    match spec {
        "none" => Ok(DeterministicSpec::None),
        "constant" => Ok(DeterministicSpec::Constant),
        "trend" | "constant_and_trend" => Ok(DeterministicSpec::ConstantAndTrend),
        other => Err(PyValueError::new_err(format!("unknown ADF spec `{other}`"))),
    }
}

type CorrelogramTuple = (usize, f64, f64, f64, f64);

/// Evenly spaced timestamped series.
#[pyclass(name = "Series", skip_from_py_object)]
#[derive(Clone)]
struct PySeries {
    inner: series::Series,
}

#[pymethods]
impl PySeries {
    /// Build from RFC3339 timestamps and values; the cadence is inferred
    /// from the first two timestamps and validated against the rest.
    #[new]
    fn new(timestamps: Vec<String>, values: Vec<f64>) -> PyResult<Self> {
        if timestamps.len() < 2 {
            return Err(PyValueError::new_err("need at least two timestamps"));
        }
        let parsed: Vec<chrono::DateTime<chrono::Utc>> = timestamps
            .iter()
            .map(|t| {
                chrono::DateTime::parse_from_rfc3339(t)
                    .map(|d| d.with_timezone(&chrono::Utc))
                    .map_err(|e| PyValueError::new_err(format!("bad timestamp `{t}`: {e}")))
            })
            .collect::<PyResult<_>>()?;
        let cadence = (parsed[1] - parsed[0]).num_seconds();
        series::Series::new(parsed, values, cadence)
            .map(|inner| PySeries { inner })
            .map_err(to_py_err)
    }

    /// Build from a start timestamp, a cadence in seconds and values.
    #[staticmethod]
    fn from_start(start: &str, cadence_secs: i64, values: Vec<f64>) -> PyResult<Self> {
        let start = chrono::DateTime::parse_from_rfc3339(start)
            .map_err(|e| PyValueError::new_err(format!("bad timestamp `{start}`: {e}")))?
            .with_timezone(&chrono::Utc);
        series::Series::from_start(start, cadence_secs, values)
            .map(|inner| PySeries { inner })
            .map_err(to_py_err)
    }

    /// Read a `timestamp,value` CSV.
    #[staticmethod]
    #[pyo3(signature = (path, fill="reject"))]
    fn from_csv(path: &str, fill: &str) -> PyResult<Self> {
        let fill = parse_fill(fill)?;
        ingest::read_series_csv(Path::new(path), fill)
            .map(|(inner, _)| PySeries { inner })
            .map_err(to_py_err)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn timestamps(&self) -> Vec<String> {
        self.inner
            .timestamps()
            .iter()
            .map(|t| t.to_rfc3339())
            .collect()
    }

    fn cadence_secs(&self) -> i64 {
        self.inner.cadence_secs()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn log_returns(&self) -> PyResult<Self> {
        series::log_returns(&self.inner)
            .map(|inner| PySeries { inner })
            .map_err(to_py_err)
    }

    fn first_difference(&self) -> PyResult<Self> {
        series::first_difference(&self.inner)
            .map(|inner| PySeries { inner })
            .map_err(to_py_err)
    }

    fn square(&self) -> Self {
        PySeries {
            inner: series::square(&self.inner),
        }
    }

    fn cumulative_sum(&self) -> Self {
        PySeries {
            inner: series::cumulative_sum(&self.inner),
        }
    }

    fn demean(&self) -> Self {
        PySeries {
            inner: self.inner.demean(),
        }
    }

    fn twap(&self, window_secs: i64) -> PyResult<Self> {
        series::twap(&self.inner, window_secs)
            .map(|inner| PySeries { inner })
            .map_err(to_py_err)
    }

    /// Rows of `(lag, acf, pacf, q_stat, q_pvalue)`.
    fn correlogram(&self, max_lag: usize) -> PyResult<Vec<CorrelogramTuple>> {
        series::correlogram(&self.inner, max_lag)
            .map(|rows| {
                rows.iter()
                    .map(|r| (r.lag, r.acf, r.pacf, r.q_stat, r.q_pvalue))
                    .collect()
            })
            .map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(len={}, cadence={}s, start={})",
            self.inner.len(),
            self.inner.cadence_secs(),
            self.inner.start().to_rfc3339()
        )
    }
}

/// Funding-rate computation with every intermediate value.
#[pyclass(name = "FundingBreakdown", skip_from_py_object)]
#[derive(Clone)]
struct PyFundingBreakdown {
    inner: funding::FundingBreakdown,
}

#[pymethods]
impl PyFundingBreakdown {
    #[getter]
    fn interest_component(&self) -> f64 {
        self.inner.interest_component
    }
    #[getter]
    fn premium_index(&self) -> f64 {
        self.inner.premium_index
    }
    #[getter]
    fn clamp_value(&self) -> f64 {
        self.inner.clamp_value
    }
    #[getter]
    fn funding_rate(&self) -> f64 {
        self.inner.funding_rate
    }
    #[getter]
    fn capped(&self) -> bool {
        self.inner.capped
    }
    #[getter]
    fn cap_bound(&self) -> f64 {
        self.inner.cap_bound
    }
    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("breakdown serializes")
    }
    fn __repr__(&self) -> String {
        format!(
            "FundingBreakdown(rate={}, capped={})",
            self.inner.funding_rate, self.inner.capped
        )
    }
}

/// `(quote_index - base_index) / funding_interval_count`.
#[pyfunction]
fn interest_rate(quote_index: f64, base_index: f64, funding_interval_count: u32) -> f64 {
    funding::interest_rate(&funding::InterestInputs {
        quote_index,
        base_index,
        funding_interval_count,
    })
}

/// Premium index from impact prices; `mode` is `literal` or `exchange`.
#[pyfunction]
#[pyo3(signature = (impact_bid, impact_ask, mark, spot, current_funding_rate=0.0, time_until_funding_secs=0, mode="literal"))]
#[allow(clippy::too_many_arguments)]
fn premium_index(
    impact_bid: f64,
    impact_ask: f64,
    mark: f64,
    spot: f64,
    current_funding_rate: f64,
    time_until_funding_secs: i64,
    mode: &str,
) -> PyResult<f64> {
    let mode = match mode {
        "literal" => funding::DenominatorMode::Literal,
        "exchange" => funding::DenominatorMode::Exchange,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown denominator mode `{other}`"
            )))
        }
    };
    funding::premium_index(
        &funding::PremiumInputs {
            impact_bid_price: impact_bid,
            impact_ask_price: impact_ask,
            mark_price: mark,
            spot_price: spot,
            current_funding_rate,
            time_until_funding_secs,
        },
        mode,
    )
    .map_err(to_py_err)
}

#[pyfunction]
fn clamp(x: f64, hi: f64, lo: f64) -> PyResult<f64> {
    funding::clamp(x, hi, lo).map_err(to_py_err)
}

/// `F = P + clamp(I - P, +0.05%, -0.05%)`, capped by the margin spread.
#[pyfunction]
fn funding_rate(
    interest: f64,
    premium_twap: f64,
    initial_margin: f64,
    maintenance_margin: f64,
) -> PyResult<PyFundingBreakdown> {
    let margin =
        funding::MarginConfig::new(initial_margin, maintenance_margin).map_err(to_py_err)?;
    Ok(PyFundingBreakdown {
        inner: funding::funding_rate(interest, premium_twap, &margin),
    })
}

#[pyfunction]
fn funding_payment(position_value: f64, breakdown: &PyFundingBreakdown) -> f64 {
    funding::funding_payment(position_value, &breakdown.inner)
}

/// ARCH LM test report as a dict.
#[pyfunction]
#[pyo3(signature = (series, lags=None, level=0.05))]
fn arch_lm_test(
    py: Python<'_>,
    series: &PySeries,
    lags: Option<usize>,
    level: f64,
) -> PyResult<Py<PyAny>> {
    let lag = match lags {
        Some(p) => p,
        None => arch::select_arch_lag(&series.inner, 12.min(series.inner.len() / 30).max(1))
            .map_err(to_py_err)?,
    };
    let report = arch::arch_lm_test(&series.inner, lag, level).map_err(to_py_err)?;
    json_to_py(py, &report)
}

#[pyfunction]
fn select_arch_lag(series: &PySeries, max_lag: usize) -> PyResult<usize> {
    arch::select_arch_lag(&series.inner, max_lag).map_err(to_py_err)
}

/// ADF test report as a dict; `spec` is `none`, `constant` or `trend`.
#[pyfunction]
#[pyo3(signature = (series, spec="constant", max_lag=4, level=0.05))]
fn adf_test(
    py: Python<'_>,
    series: &PySeries,
    spec: &str,
    max_lag: usize,
    level: f64,
) -> PyResult<Py<PyAny>> {
    let report =
        adf::adf_test(&series.inner, parse_spec(spec)?, max_lag, level).map_err(to_py_err)?;
    json_to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (series, spec="constant", max_lag=4, level=0.05))]
fn integration_order(series: &PySeries, spec: &str, max_lag: usize, level: f64) -> PyResult<u32> {
    adf::integration_order(&series.inner, parse_spec(spec)?, max_lag, level).map_err(to_py_err)
}

/// Both Granger directions as dicts: `(x_to_y, y_to_x)`.
#[pyfunction]
#[pyo3(signature = (x, y, lags=None, level=0.05))]
fn granger_test(
    py: Python<'_>,
    x: &PySeries,
    y: &PySeries,
    lags: Option<usize>,
    level: f64,
) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let lag = match lags {
        Some(p) => p,
        None => granger::select_var_lag(&x.inner, &y.inner, 8.min(x.inner.len() / 40).max(1))
            .map_err(to_py_err)?,
    };
    let (a, b) = granger::granger_test(&x.inner, &y.inner, lag, level).map_err(to_py_err)?;
    Ok((json_to_py(py, &a)?, json_to_py(py, &b)?))
}

#[pyfunction]
fn select_var_lag(x: &PySeries, y: &PySeries, max_lag: usize) -> PyResult<usize> {
    granger::select_var_lag(&x.inner, &y.inner, max_lag).map_err(to_py_err)
}

/// A fitted volatility model.
#[pyclass(name = "VolatilityFit", skip_from_py_object)]
#[derive(Clone)]
struct PyVolatilityFit {
    inner: volatility::VolatilityFit,
}

#[pymethods]
impl PyVolatilityFit {
    #[getter]
    fn family(&self) -> String {
        self.inner.family.name().to_string()
    }
    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.inner
            .params
            .named()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
    #[getter]
    fn log_likelihood(&self) -> f64 {
        self.inner.log_likelihood
    }
    #[getter]
    fn aic(&self) -> f64 {
        self.inner.criteria.aic
    }
    #[getter]
    fn sic(&self) -> f64 {
        self.inner.criteria.sic
    }
    #[getter]
    fn hqc(&self) -> f64 {
        self.inner.criteria.hqc
    }
    #[getter]
    fn aic_per_obs(&self) -> f64 {
        self.inner.criteria.aic_per_obs
    }
    #[getter]
    fn sic_per_obs(&self) -> f64 {
        self.inner.criteria.sic_per_obs
    }
    #[getter]
    fn hqc_per_obs(&self) -> f64 {
        self.inner.criteria.hqc_per_obs
    }
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn n_obs(&self) -> usize {
        self.inner.n_obs
    }
    fn conditional_variance(&self) -> PySeries {
        PySeries {
            inner: self.inner.conditional_variance.clone(),
        }
    }
    /// Variance forecast for `horizon` periods ahead.
    fn forecast(&self, horizon: usize) -> PyResult<Vec<f64>> {
        volatility::forecast(&self.inner, horizon)
            .map(|f| f.variances)
            .map_err(to_py_err)
    }
    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("fit serializes")
    }
    fn __repr__(&self) -> String {
        format!(
            "VolatilityFit(family={}, aic={:.4}, converged={})",
            self.inner.family.name(),
            self.inner.criteria.aic,
            self.inner.converged
        )
    }
}

fn parse_family(family: &str) -> PyResult<Family> {
    family.parse::<Family>().map_err(to_py_err)
}

fn fit_options(demean: bool, seed: u64, egarch_variant: &str) -> PyResult<FitOptions> {
    let variant = match egarch_variant {
        "nelson" => EgarchVariant::Nelson,
        "squared_shock" => EgarchVariant::SquaredShock,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown EGARCH variant `{other}`"
            )))
        }
    };
    Ok(FitOptions {
        demean,
        egarch_variant: variant,
        restart_seed: seed,
        ..FitOptions::default()
    })
}

/// Maximum-likelihood fit of one family.
#[pyfunction]
#[pyo3(signature = (series, family, demean=true, seed=0, egarch_variant="nelson"))]
fn fit(
    series: &PySeries,
    family: &str,
    demean: bool,
    seed: u64,
    egarch_variant: &str,
) -> PyResult<PyVolatilityFit> {
    let opts = fit_options(demean, seed, egarch_variant)?;
    volatility::fit_with(&series.inner, parse_family(family)?, &opts)
        .map(|inner| PyVolatilityFit { inner })
        .map_err(to_py_err)
}

/// Fit several families; returns `(ranked, excluded)` with the ranked list
/// in ascending AIC order.
#[pyfunction]
#[pyo3(signature = (series, families=None, demean=true, seed=0))]
fn compare(
    series: &PySeries,
    families: Option<Vec<String>>,
    demean: bool,
    seed: u64,
) -> PyResult<(Vec<PyVolatilityFit>, Vec<PyVolatilityFit>)> {
    let families: Vec<Family> = match families {
        None => Family::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| parse_family(n))
            .collect::<PyResult<_>>()?,
    };
    let opts = fit_options(demean, seed, "nelson")?;
    let cmp = volatility::compare_with(&series.inner, &families, &opts).map_err(to_py_err)?;
    let wrap = |v: Vec<volatility::VolatilityFit>| {
        v.into_iter()
            .map(|inner| PyVolatilityFit { inner })
            .collect::<Vec<_>>()
    };
    Ok((wrap(cmp.ranked), wrap(cmp.excluded)))
}

/// Simulate `r_t = sigma_t w_t` for a family; extra parameters apply per
/// family (`gamma` for tarch/egarch/parch, `delta` for parch; igarch takes
/// only `omega` and `alpha`).
#[pyfunction]
#[pyo3(signature = (family, n, seed, omega, alpha, beta=None, gamma=None, delta=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    family: &str,
    n: usize,
    seed: u64,
    omega: f64,
    alpha: f64,
    beta: Option<f64>,
    gamma: Option<f64>,
    delta: Option<f64>,
) -> PyResult<PySeries> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| PyValueError::new_err(format!("{family} requires `{name}`")))
    };
    let params = match parse_family(family)? {
        Family::Garch => FamilyParams::Garch {
            omega,
            alpha,
            beta: need(beta, "beta")?,
        },
        Family::Tarch => FamilyParams::Tarch {
            omega,
            alpha,
            gamma: need(gamma, "gamma")?,
            beta: need(beta, "beta")?,
        },
        Family::Egarch => FamilyParams::Egarch {
            omega,
            alpha,
            gamma: need(gamma, "gamma")?,
            beta: need(beta, "beta")?,
        },
        Family::Parch => FamilyParams::Parch {
            omega,
            alpha,
            gamma: need(gamma, "gamma")?,
            beta: need(beta, "beta")?,
            delta: need(delta, "delta")?,
        },
        Family::Igarch => FamilyParams::Igarch { omega, alpha },
    };
    volatility::simulate(&params, n, seed)
        .map(|inner| PySeries { inner })
        .map_err(to_py_err)
}

/// Run the full pipeline; returns the report in the requested format
/// (`json`, `text_tables` or `plot_csv`).
#[pyfunction]
#[pyo3(signature = (funding_csv, price_csv, config=None, format="json"))]
fn run_pipeline(
    funding_csv: &str,
    price_csv: &str,
    config: Option<&str>,
    format: &str,
) -> PyResult<String> {
    let config = match config {
        Some(path) => PipelineConfig::from_file(Path::new(path)).map_err(to_py_err)?,
        None => PipelineConfig::default(),
    };
    let format: pipeline::ReportFormat = format.parse().map_err(to_py_err)?;
    let report = pipeline::run_pipeline(Path::new(funding_csv), Path::new(price_csv), &config)
        .map_err(to_py_err)?;
    let bytes = pipeline::emit_report(&report, format).map_err(to_py_err)?;
    String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// MacKinnon critical values for a given spec and sample size, as a dict.
#[pyfunction]
fn adf_critical_values(py: Python<'_>, spec: &str, n: usize) -> PyResult<Py<PyAny>> {
    let cv = adf::mackinnon_critical_values(parse_spec(spec)?, n);
    json_to_py(py, &cv)
}

/// Serialize through JSON into native Python objects (dicts, lists, floats).
fn json_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_string(value).expect("report types serialize");
    let json_mod = py.import("json")?;
    let obj = json_mod.call_method1("loads", (json,))?;
    Ok(obj.unbind())
}

#[pymodule]
fn perpstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_class::<PyFundingBreakdown>()?;
    m.add_class::<PyVolatilityFit>()?;
    m.add_function(wrap_pyfunction!(interest_rate, m)?)?;
    m.add_function(wrap_pyfunction!(premium_index, m)?)?;
    m.add_function(wrap_pyfunction!(clamp, m)?)?;
    m.add_function(wrap_pyfunction!(funding_rate, m)?)?;
    m.add_function(wrap_pyfunction!(funding_payment, m)?)?;
    m.add_function(wrap_pyfunction!(arch_lm_test, m)?)?;
    m.add_function(wrap_pyfunction!(select_arch_lag, m)?)?;
    m.add_function(wrap_pyfunction!(adf_test, m)?)?;
    m.add_function(wrap_pyfunction!(adf_critical_values, m)?)?;
    m.add_function(wrap_pyfunction!(integration_order, m)?)?;
    m.add_function(wrap_pyfunction!(granger_test, m)?)?;
    m.add_function(wrap_pyfunction!(select_var_lag, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
