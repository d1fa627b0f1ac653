//! End-to-end driver: ingest the funding-rate and exchange-rate CSVs, run
//! the statistical sequence (normalization, ARCH LM, ADF in all
//! specifications, Granger causality, GARCH-family comparison, forecast) and
//! emit a consolidated report.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adf::{adf_test, AdfReport, DeterministicSpec};
use crate::arch::{arch_lm_test, select_arch_lag, ArchTestReport};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::granger::{granger_test, select_var_lag, GrangerReport};
use crate::ingest::{read_series_csv, IngestStats};
use crate::series::{align, correlogram, first_difference, CorrelogramRow, Series};
use crate::volatility::{compare_with, forecast, FitOptions, ModelComparison, VarianceForecast};

/// Reproducibility record: input digests, config snapshot and row accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub funding_file: String,
    pub funding_sha256: String,
    pub price_file: String,
    pub price_sha256: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub funding_rows: IngestStats,
    pub price_rows: IngestStats,
    pub funding_rows_dropped_for_alignment: usize,
    pub price_rows_dropped_for_alignment: usize,
    /// Aligned observations entering the pipeline.
    pub n_observations: usize,
}

/// Correlogram data for the normalized funding series and its square — the
/// inputs to the usual pre/post-squaring diagnostic plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelogramSection {
    pub normalized: Vec<CorrelogramRow>,
    pub squared: Vec<CorrelogramRow>,
}

/// Consolidated output. Sections are present exactly when their stage ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub arch: Option<ArchTestReport>,
    pub correlograms: Option<CorrelogramSection>,
    /// Six rows per series: level and first difference, three deterministic
    /// specifications each.
    pub adf_funding: Option<Vec<AdfReport>>,
    pub adf_price: Option<Vec<AdfReport>>,
    pub granger: Option<(GrangerReport, GrangerReport)>,
    pub model_comparison: Option<ModelComparison>,
    pub forecast: Option<VarianceForecast>,
    /// True when every enabled stage produced its section.
    pub complete: bool,
    pub provenance: Provenance,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Schwert's rule of thumb for the maximum ADF lag.
fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Level and first-difference ADF reports in all three specifications.
fn adf_battery(series: &Series, max_lag: usize, level: f64) -> Result<Vec<AdfReport>> {
    let diff = first_difference(series)?;
    let jobs: Vec<(u32, DeterministicSpec)> = [0u32, 1u32]
        .iter()
        .flat_map(|d| DeterministicSpec::ALL.iter().map(move |s| (*d, *s)))
        .collect();
    jobs.par_iter()
        .map(|(d, spec)| {
            let target = if *d == 0 { series } else { &diff };
            let mut report = adf_test(target, *spec, max_lag, level)?;
            report.differencing_level = *d;
            Ok(report)
        })
        .collect()
}

/// Run the full sequence on the two input files.
pub fn run_pipeline(
    funding_csv: &Path,
    price_csv: &Path,
    config: &PipelineConfig,
) -> Result<PipelineReport> {
    let (funding_raw, funding_rows) = read_series_csv(funding_csv, config.fill)?;
    let (price_raw, price_rows) = read_series_csv(price_csv, config.fill)?;
    let (funding, price, funding_dropped, price_dropped) = align(
        &funding_raw,
        &price_raw,
        &file_name(funding_csv),
        &file_name(price_csv),
    )?;

    let provenance = Provenance {
        funding_file: file_name(funding_csv),
        funding_sha256: sha256_hex(funding_csv)?,
        price_file: file_name(price_csv),
        price_sha256: sha256_hex(price_csv)?,
        seed: config.seed,
        config: config.snapshot(),
        funding_rows,
        price_rows,
        funding_rows_dropped_for_alignment: funding_dropped,
        price_rows_dropped_for_alignment: price_dropped,
        n_observations: funding.len(),
    };

    // Normalization: funding rates change sign, so both series are taken to
    // first differences for the stationary stages.
    let funding_d = first_difference(&funding).map_err(|e| e.in_stage("normalize"))?;
    let price_d = first_difference(&price).map_err(|e| e.in_stage("normalize"))?;
    let level = config.significance_level;

    let (arch, correlograms) = if config.stages.arch {
        let demeaned = funding_d.demean();
        let lag = match config.arch_lags {
            Some(p) => p,
            None => select_arch_lag(&demeaned, 12.min(demeaned.len() / 30).max(1))
                .map_err(|e| e.in_stage("arch"))?,
        };
        let report = arch_lm_test(&demeaned, lag, level).map_err(|e| e.in_stage("arch"))?;
        let max_corr_lag = 36.min(demeaned.len() / 2 - 1).max(1);
        let normalized =
            correlogram(&demeaned, max_corr_lag).map_err(|e| e.in_stage("arch"))?;
        let squared = correlogram(&crate::series::square(&demeaned), max_corr_lag)
            .map_err(|e| e.in_stage("arch"))?;
        (
            Some(report),
            Some(CorrelogramSection { normalized, squared }),
        )
    } else {
        (None, None)
    };

    let (adf_funding, adf_price) = if config.stages.adf {
        let max_lag = config
            .adf_max_lag
            .unwrap_or_else(|| schwert_max_lag(funding.len()));
        let f = adf_battery(&funding, max_lag, level).map_err(|e| e.in_stage("adf"))?;
        let p = adf_battery(&price, max_lag, level).map_err(|e| e.in_stage("adf"))?;
        (Some(f), Some(p))
    } else {
        (None, None)
    };

    let granger = if config.stages.granger {
        let lag = match config.granger_lags {
            Some(p) => p,
            None => select_var_lag(&price_d, &funding_d, 8.min(price_d.len() / 40).max(1))
                .map_err(|e| e.in_stage("granger"))?,
        };
        Some(granger_test(&price_d, &funding_d, lag, level).map_err(|e| e.in_stage("granger"))?)
    } else {
        None
    };

    let model_comparison = if config.stages.compare {
        let opts = FitOptions {
            restart_seed: config.seed,
            ..FitOptions::default()
        };
        Some(
            compare_with(&funding_d, &config.families, &opts)
                .map_err(|e| e.in_stage("compare"))?,
        )
    } else {
        None
    };

    let forecast_section = match (&model_comparison, config.stages.forecast) {
        (Some(cmp), true) => {
            let best = cmp.best().ok_or(Error::NotConverged).map_err(|e| e.in_stage("forecast"))?;
            Some(forecast(best, config.forecast_horizon).map_err(|e| e.in_stage("forecast"))?)
        }
        _ => None,
    };

    let complete = arch.is_some() == config.stages.arch
        && adf_funding.is_some() == config.stages.adf
        && granger.is_some() == config.stages.granger
        && model_comparison.is_some() == config.stages.compare
        && forecast_section.is_some() == (config.stages.forecast && config.stages.compare);

    Ok(PipelineReport {
        arch,
        correlograms,
        adf_funding,
        adf_price,
        granger,
        model_comparison,
        forecast: forecast_section,
        complete,
        provenance,
    })
}

/// Output encodings of a [`PipelineReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    TextTables,
    PlotCsv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "text" | "text_tables" => Ok(ReportFormat::TextTables),
            "plot" | "plot_csv" => Ok(ReportFormat::PlotCsv),
            other => Err(Error::ParseError {
                path: "<format>".into(),
                line: 0,
                reason: format!("unknown report format `{other}`"),
            }),
        }
    }
}

/// Serialize the report. JSON is lossless and byte-stable for fixed inputs;
/// the text tables mirror the published layout; the plot CSV carries the
/// correlogram rows of the normalized and squared funding series.
pub fn emit_report(report: &PipelineReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| Error::Io {
                path: "<json>".into(),
                source: std::io::Error::other(e),
            })?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::TextTables => {
            let text = render_text_tables(report)?;
            Ok(text.into_bytes())
        }
        ReportFormat::PlotCsv => {
            let section = report
                .correlograms
                .as_ref()
                .ok_or_else(|| Error::IncompleteReport {
                    section: "correlograms".into(),
                })?;
            let mut out = String::from("series,lag,acf,pacf,q_stat,q_pvalue\n");
            for (name, rows) in [
                ("normalized", &section.normalized),
                ("squared", &section.squared),
            ] {
                for r in rows {
                    out.push_str(&format!(
                        "{name},{},{:.6},{:.6},{:.6},{:.6}\n",
                        r.lag, r.acf, r.pacf, r.q_stat, r.q_pvalue
                    ));
                }
            }
            Ok(out.into_bytes())
        }
    }
}

/// Display names used in the causality table.
pub const PRICE_SERIES_NAME: &str = "8 Hour price";
pub const FUNDING_SERIES_NAME: &str = "FundingRate";

/// Table rendering of one ARCH LM report.
pub fn arch_table_text(arch: &ArchTestReport) -> String {
    let mut out = String::from("ARCH Test results\n");
    out.push_str(&format!("Probability of F: {:.4}\n", arch.f_pvalue));
    out.push_str(&format!(
        "Probability of LM Statistic (Chi-Square({})): {:.4}\n",
        arch.lag_order, arch.lm_pvalue
    ));
    out.push_str(&format!("Probability of C: {:.4}\n", arch.const_pvalue));
    out.push_str(&format!(
        "value of alpha1(squared residuals): {:.3}\n",
        arch.alpha_estimates.first().copied().unwrap_or(f64::NAN)
    ));
    out
}

/// Table rendering of a set of unit-root rows, in the published column order.
pub fn adf_table_text(title: &str, rows: &[AdfReport]) -> String {
    let mut out = format!("{title}\n");
    out.push_str(
        "Test for Unit root in / Exogenous / t-Statistic / Probability / 1% level / 5% level / 10% level\n",
    );
    for r in rows {
        let level_label = if r.differencing_level == 0 {
            "Level"
        } else {
            "First difference"
        };
        out.push_str(&format!(
            "{level_label} / {} / {:.6} / {:.4} / {:.6} / {:.6} / {:.6}\n",
            r.spec.label(),
            r.t_statistic,
            r.p_value,
            r.critical_values.pct1,
            r.critical_values.pct5,
            r.critical_values.pct10
        ));
    }
    out
}

/// Table rendering of the two-directional causality test.
pub fn granger_table_text(
    x_to_y: &GrangerReport,
    y_to_x: &GrangerReport,
    x_name: &str,
    y_name: &str,
) -> String {
    let mut out = String::from("Causality test results\n");
    out.push_str("Null Hypothesis / F-statistic / Probability\n");
    out.push_str(&format!(
        "{x_name} does not Granger Cause {y_name} / {:.5} / {:.3e}\n",
        x_to_y.f_statistic, x_to_y.p_value
    ));
    out.push_str(&format!(
        "{y_name} does not Granger Cause {x_name} / {:.5} / {:.3e}\n",
        y_to_x.f_statistic, y_to_x.p_value
    ));
    out
}

/// Table rendering of the model comparison (per-observation criteria, the
/// convention of the published comparison table).
pub fn comparison_table_text(cmp: &ModelComparison) -> String {
    let mut out = String::from("Information Criterion for various models\n");
    out.push_str("Model / AIC / SIC / HQC\n");
    for fit in &cmp.ranked {
        out.push_str(&format!(
            "{} / {:.5} / {:.5} / {:.5}\n",
            fit.family.label(),
            fit.criteria.aic_per_obs,
            fit.criteria.sic_per_obs,
            fit.criteria.hqc_per_obs
        ));
    }
    for fit in &cmp.excluded {
        out.push_str(&format!(
            "{} / did not converge, excluded from ranking\n",
            fit.family.label()
        ));
    }
    out
}

fn render_text_tables(report: &PipelineReport) -> Result<String> {
    let mut out = String::new();
    let mut any = false;

    if let Some(arch) = &report.arch {
        any = true;
        out.push_str(&arch_table_text(arch));
        out.push('\n');
    }
    if let Some(rows) = &report.adf_funding {
        any = true;
        out.push_str(&adf_table_text("Stationarity in Funding Rate", rows));
        out.push('\n');
    }
    if let Some(rows) = &report.adf_price {
        any = true;
        out.push_str(&adf_table_text("Stationarity in Exchange Rate", rows));
        out.push('\n');
    }
    if let Some((x_to_y, y_to_x)) = &report.granger {
        any = true;
        out.push_str(&granger_table_text(
            x_to_y,
            y_to_x,
            PRICE_SERIES_NAME,
            FUNDING_SERIES_NAME,
        ));
        out.push('\n');
    }
    if let Some(cmp) = &report.model_comparison {
        any = true;
        out.push_str(&comparison_table_text(cmp));
        out.push('\n');
    }
    if let Some(fc) = &report.forecast {
        any = true;
        out.push_str(&format!(
            "Variance forecast from {} ({} periods)\n",
            fc.origin_timestamp.to_rfc3339(),
            fc.horizon
        ));
        for (i, v) in fc.variances.iter().enumerate() {
            out.push_str(&format!("h={} / {:.6e}\n", i + 1, v));
        }
        out.push('\n');
    }

    if !any {
        return Err(Error::IncompleteReport {
            section: "all".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::FUNDING_PERIOD_SECS;
    use chrono::{TimeZone, Utc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::io::Write;

    fn write_series_csv_file(name: &str, values: &[f64]) -> std::path::PathBuf {
        let start = Utc.with_ymd_and_hms(2016, 6, 4, 4, 0, 0).unwrap();
        let mut path = std::env::temp_dir();
        path.push(format!("perpstat-{}-{}", std::process::id(), name));
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "timestamp,value").unwrap();
        for (i, v) in values.iter().enumerate() {
            let ts = start + chrono::Duration::seconds(i as i64 * FUNDING_PERIOD_SECS);
            writeln!(f, "{},{}", ts.to_rfc3339(), v).unwrap();
        }
        path
    }

    /// Synthetic pair with known outcomes: price is a random walk (I(1)),
    /// funding is ARCH(1) noise plus a lagged price-return term (I(0),
    /// heteroskedastic, Granger-caused by price).
    fn synthetic_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let mut price = Vec::with_capacity(n);
        let mut returns = Vec::with_capacity(n);
        let mut level = 1000.0;
        for _ in 0..n {
            let r: f64 = g.sample(&mut rng);
            returns.push(r);
            level += r;
            price.push(level);
        }
        let mut funding = Vec::with_capacity(n);
        let mut prev = 0.0f64;
        for t in 0..n {
            let sigma = (0.5 + 0.4 * prev * prev).sqrt();
            let shock: f64 = sigma * g.sample(&mut rng);
            prev = shock;
            let coupled = if t == 0 { 0.0 } else { 0.3 * returns[t - 1] };
            funding.push(shock + coupled);
        }
        (funding, price)
    }

    #[test]
    fn full_run_produces_expected_outcomes() {
        let (funding, price) = synthetic_pair(1200, 5);
        let f_path = write_series_csv_file("pipe-f.csv", &funding);
        let p_path = write_series_csv_file("pipe-p.csv", &price);
        let mut config = PipelineConfig::default();
        config.adf_max_lag = Some(4);
        config.families = vec![crate::volatility::Family::Garch, crate::volatility::Family::Egarch];

        let report = run_pipeline(&f_path, &p_path, &config).unwrap();
        assert!(report.complete);
        let arch = report.arch.as_ref().unwrap();
        assert!(arch.reject_null, "ARCH effects should be detected");

        // Funding (differenced input is level 1 here, but the battery tests
        // the ingested level series): funding is I(0), price is I(1).
        let funding_level = &report.adf_funding.as_ref().unwrap()[0];
        assert_eq!(funding_level.differencing_level, 0);
        assert!(funding_level.reject_unit_root);
        let price_rows = report.adf_price.as_ref().unwrap();
        let price_level_const = price_rows
            .iter()
            .find(|r| r.differencing_level == 0 && r.spec == DeterministicSpec::Constant)
            .unwrap();
        assert!(!price_level_const.reject_unit_root);
        let price_diff_const = price_rows
            .iter()
            .find(|r| r.differencing_level == 1 && r.spec == DeterministicSpec::Constant)
            .unwrap();
        assert!(price_diff_const.reject_unit_root);

        let (price_to_funding, funding_to_price) = report.granger.as_ref().unwrap();
        assert!(price_to_funding.reject_noncausality);
        assert!(!funding_to_price.reject_noncausality);

        assert!(!report.model_comparison.as_ref().unwrap().ranked.is_empty());
        assert_eq!(report.forecast.as_ref().unwrap().variances.len(), 30);

        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let (funding, price) = synthetic_pair(800, 9);
        let f_path = write_series_csv_file("pipe-det-f.csv", &funding);
        let p_path = write_series_csv_file("pipe-det-p.csv", &price);
        let mut config = PipelineConfig::default();
        config.adf_max_lag = Some(3);
        config.families = vec![crate::volatility::Family::Garch, crate::volatility::Family::Igarch];
        config.seed = 31;

        let a = run_pipeline(&f_path, &p_path, &config).unwrap();
        let b = run_pipeline(&f_path, &p_path, &config).unwrap();
        let ja = emit_report(&a, ReportFormat::Json).unwrap();
        let jb = emit_report(&b, ReportFormat::Json).unwrap();
        assert_eq!(ja, jb, "same inputs and seed must be byte-identical");

        let parsed: PipelineReport = serde_json::from_slice(&ja).unwrap();
        assert_eq!(parsed, a);

        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn granger_stage_uses_plain_first_differences() {
        let (funding, price) = synthetic_pair(900, 33);
        let f_path = write_series_csv_file("pipe-gd-f.csv", &funding);
        let p_path = write_series_csv_file("pipe-gd-p.csv", &price);
        let mut config = PipelineConfig::default();
        config.adf_max_lag = Some(2);
        config.stages.compare = false;
        config.stages.forecast = false;
        let report = run_pipeline(&f_path, &p_path, &config).unwrap();
        let (got_xy, got_yx) = report.granger.as_ref().unwrap();

        // Recompute outside the pipeline from the raw ingested series; the
        // statistics must agree bit for bit (no hidden transforms).
        let (f_raw, _) = crate::ingest::read_series_csv(&f_path, crate::ingest::FillPolicy::Reject)
            .unwrap();
        let (p_raw, _) = crate::ingest::read_series_csv(&p_path, crate::ingest::FillPolicy::Reject)
            .unwrap();
        let f_d = first_difference(&f_raw).unwrap();
        let p_d = first_difference(&p_raw).unwrap();
        let (want_xy, want_yx) =
            crate::granger::granger_test(&p_d, &f_d, got_xy.lag_order, 0.05).unwrap();
        assert_eq!(got_xy.f_statistic.to_bits(), want_xy.f_statistic.to_bits());
        assert_eq!(got_yx.f_statistic.to_bits(), want_yx.f_statistic.to_bits());

        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn stage_toggles_remove_exactly_their_sections() {
        let (funding, price) = synthetic_pair(700, 13);
        let f_path = write_series_csv_file("pipe-tog-f.csv", &funding);
        let p_path = write_series_csv_file("pipe-tog-p.csv", &price);
        let mut config = PipelineConfig::default();
        config.adf_max_lag = Some(2);
        config.families = vec![crate::volatility::Family::Garch, crate::volatility::Family::Igarch];
        config.stages.granger = false;
        config.stages.forecast = false;

        let report = run_pipeline(&f_path, &p_path, &config).unwrap();
        assert!(report.complete);
        assert!(report.granger.is_none());
        assert!(report.forecast.is_none());
        assert!(report.arch.is_some());
        assert!(report.adf_funding.is_some());
        assert!(report.model_comparison.is_some());

        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn degenerate_series_fails_with_stage_tag() {
        let f_path = write_series_csv_file("pipe-deg-f.csv", &vec![1.0; 300]);
        let p_path = write_series_csv_file("pipe-deg-p.csv", &vec![2.0; 300]);
        let config = PipelineConfig::default();
        match run_pipeline(&f_path, &p_path, &config) {
            Err(Error::Stage { stage, source }) => {
                assert_eq!(stage, "arch");
                assert!(matches!(*source, Error::DegenerateSeries));
            }
            other => panic!("expected stage-tagged degeneracy, got {other:?}"),
        }
        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn empty_funding_csv_is_a_parse_error() {
        let mut path = std::env::temp_dir();
        path.push(format!("perpstat-{}-empty.csv", std::process::id()));
        std::fs::write(&path, "timestamp,value\n").unwrap();
        let p_path = write_series_csv_file("pipe-empty-p.csv", &[1.0, 2.0, 3.0]);
        match run_pipeline(&path, &p_path, &PipelineConfig::default()) {
            Err(Error::ParseError { path: p, .. }) => {
                assert!(p.contains("empty.csv"), "error names the file: {p}");
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
        std::fs::remove_file(path).ok();
        std::fs::remove_file(p_path).ok();
    }

    #[test]
    fn text_tables_have_published_headers() {
        let (funding, price) = synthetic_pair(700, 21);
        let f_path = write_series_csv_file("pipe-txt-f.csv", &funding);
        let p_path = write_series_csv_file("pipe-txt-p.csv", &price);
        let mut config = PipelineConfig::default();
        config.adf_max_lag = Some(2);
        config.families = vec![crate::volatility::Family::Garch, crate::volatility::Family::Egarch];
        let report = run_pipeline(&f_path, &p_path, &config).unwrap();

        let text = String::from_utf8(emit_report(&report, ReportFormat::TextTables).unwrap())
            .unwrap();
        assert!(text.contains(
            "Test for Unit root in / Exogenous / t-Statistic / Probability / 1% level / 5% level / 10% level"
        ));
        assert!(text.contains("8 Hour price does not Granger Cause FundingRate"));
        assert!(text.contains("FundingRate does not Granger Cause 8 Hour price"));
        assert!(text.contains("Information Criterion for various models"));

        let plot = String::from_utf8(emit_report(&report, ReportFormat::PlotCsv).unwrap())
            .unwrap();
        assert!(plot.starts_with("series,lag,acf,pacf,q_stat,q_pvalue"));
        assert!(plot.contains("\nsquared,1,"));

        std::fs::remove_file(f_path).ok();
        std::fs::remove_file(p_path).ok();
    }
}
