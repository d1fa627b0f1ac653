//! `perpstat`: funding-rate computation and the econometrics pipeline from
//! the command line. Exit codes: 0 success, 2 input error, 3 stage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use perpstat_core::adf::{adf_test, DeterministicSpec};
use perpstat_core::arch::{arch_lm_test, select_arch_lag};
use perpstat_core::config::PipelineConfig;
use perpstat_core::error::Error;
use perpstat_core::funding::{funding_schedule, MarginConfig};
use perpstat_core::granger::{granger_test, select_var_lag};
use perpstat_core::ingest::{read_funding_inputs_csv, read_series_csv, FillPolicy};
use perpstat_core::pipeline::{
    adf_table_text, arch_table_text, comparison_table_text, emit_report, granger_table_text,
    run_pipeline, ReportFormat,
};
use perpstat_core::series::{first_difference, Series};
use perpstat_core::volatility::{compare_with, fit_with, forecast, Family, FitOptions};

#[derive(Parser)]
#[command(
    name = "perpstat",
    version,
    about = "Perpetual-swap funding rates and funding-rate econometrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SeriesInput {
    /// CSV with header `timestamp,value` (ISO-8601 timestamps, UTC offset).
    #[arg(long)]
    input: PathBuf,
    /// Apply first differencing before the operation.
    #[arg(long)]
    difference: bool,
    /// Gap handling: reject or previous (carry last observation forward).
    #[arg(long, default_value = "reject")]
    fill: String,
}

impl SeriesInput {
    fn load(&self) -> Result<Series, Error> {
        let fill = parse_fill(&self.fill)?;
        let (series, _) = read_series_csv(&self.input, fill)?;
        if self.difference {
            first_difference(&series)
        } else {
            Ok(series)
        }
    }
}

fn parse_fill(s: &str) -> Result<FillPolicy, Error> {
    match s {
        "reject" => Ok(FillPolicy::Reject),
        "previous" => Ok(FillPolicy::Previous),
        other => Err(Error::ParseError {
            path: "<args>".into(),
            line: 0,
            reason: format!("unknown fill policy `{other}`"),
        }),
    }
}

fn parse_lags(s: &str) -> Result<Option<usize>, Error> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        s.parse::<usize>().map(Some).map_err(|_| Error::ParseError {
            path: "<args>".into(),
            line: 0,
            reason: format!("expected `auto` or an integer, found `{s}`"),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a funding-rate CSV and a price CSV.
    Run {
        #[arg(long)]
        funding: PathBuf,
        #[arg(long)]
        price: PathBuf,
        /// Plain `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// json, text_tables or plot_csv.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Hypothesis tests on a single series (or a pair, for granger).
    #[command(subcommand)]
    Test(TestCommand),
    /// Fit one volatility model family.
    Fit {
        #[command(flatten)]
        series: SeriesInput,
        #[arg(long, default_value = "egarch")]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit several families and rank them by information criteria.
    Compare {
        #[command(flatten)]
        series: SeriesInput,
        /// `all` or a comma-separated list of families.
        #[arg(long, default_value = "all")]
        families: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the conditional variance path of the best fit to this CSV.
        #[arg(long)]
        variance_out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Fit a family and forecast the conditional variance.
    Forecast {
        #[command(flatten)]
        series: SeriesInput,
        #[arg(long, default_value = "egarch")]
        family: String,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Funding-rate engine.
    #[command(subcommand)]
    Funding(FundingCommand),
}

#[derive(Subcommand)]
enum TestCommand {
    /// Engle's ARCH LM test.
    Arch {
        #[command(flatten)]
        series: SeriesInput,
        /// Lag order, or `auto` for AIC selection.
        #[arg(long, default_value = "auto")]
        lags: String,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Augmented Dickey-Fuller unit-root test, level and first difference.
    Adf {
        #[command(flatten)]
        series: SeriesInput,
        /// all, none, constant or trend.
        #[arg(long, default_value = "all")]
        spec: String,
        #[arg(long, default_value = "auto")]
        max_lag: String,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Pairwise Granger causality in both directions.
    Granger {
        /// CSV for the first series (x).
        #[arg(long)]
        x: PathBuf,
        /// CSV for the second series (y).
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value = "auto")]
        lags: String,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        /// Difference both series first (the usual stationarity transform).
        #[arg(long)]
        difference: bool,
        #[arg(long, default_value = "reject")]
        fill: String,
        #[arg(long, default_value = "x")]
        x_name: String,
        #[arg(long, default_value = "y")]
        y_name: String,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

#[derive(Subcommand)]
enum FundingCommand {
    /// Compute per-period funding from minute-level interest and premium
    /// samples (CSV header `timestamp,interest,premium`); emits one JSON
    /// line per funding period.
    Compute {
        #[arg(long)]
        input: PathBuf,
        /// Config file providing margins and the funding schedule.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            funding,
            price,
            config,
            out,
            format,
        } => {
            let config = load_config(&config)?;
            let format: ReportFormat = format.parse()?;
            let report = run_pipeline(&funding, &price, &config)?;
            let bytes = emit_report(&report, format)?;
            match out {
                Some(path) => std::fs::write(&path, bytes).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes).map_err(|source| Error::Io {
                        path: "<stdout>".into(),
                        source,
                    })?;
                }
            }
            Ok(())
        }
        Command::Test(test) => run_test(test),
        Command::Fit { series, family, seed } => {
            let data = series.load()?;
            let family: Family = family.parse()?;
            let opts = FitOptions {
                restart_seed: seed,
                ..FitOptions::default()
            };
            let fitted = fit_with(&data, family, &opts)?;
            println!("{}", to_json(&fitted));
            Ok(())
        }
        Command::Compare {
            series,
            families,
            seed,
            variance_out,
            format,
        } => {
            let data = series.load()?;
            let families: Vec<Family> = if families.eq_ignore_ascii_case("all") {
                Family::ALL.to_vec()
            } else {
                families
                    .split(',')
                    .map(|f| f.trim().parse())
                    .collect::<Result<_, _>>()?
            };
            let opts = FitOptions {
                restart_seed: seed,
                ..FitOptions::default()
            };
            let cmp = compare_with(&data, &families, &opts)?;
            if let Some(path) = &variance_out {
                if let Some(best) = cmp.best() {
                    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    perpstat_core::ingest::write_series_csv(
                        &best.conditional_variance,
                        &mut file,
                    )?;
                }
            }
            if format == "text" {
                print!("{}", comparison_table_text(&cmp));
            } else {
                println!("{}", to_json(&cmp));
            }
            Ok(())
        }
        Command::Forecast {
            series,
            family,
            horizon,
            seed,
        } => {
            let data = series.load()?;
            let family: Family = family.parse()?;
            let opts = FitOptions {
                restart_seed: seed,
                ..FitOptions::default()
            };
            let fitted = fit_with(&data, family, &opts)?;
            let fc = forecast(&fitted, horizon)?;
            println!("{}", to_json(&fc));
            Ok(())
        }
        Command::Funding(FundingCommand::Compute { input, config }) => {
            let config = load_config(&config)?;
            let margin = MarginConfig::new(config.initial_margin, config.maintenance_margin)?;
            let (interest, premium) = read_funding_inputs_csv(&input)?;
            let periods = funding_schedule(&interest, &premium, &margin, &config.funding_hours)?;
            for period in periods {
                println!(
                    "{}",
                    serde_json::to_string(&period).expect("period serializes")
                );
            }
            Ok(())
        }
    }
}

fn run_test(test: TestCommand) -> Result<(), Error> {
    match test {
        TestCommand::Arch {
            series,
            lags,
            level,
            format,
        } => {
            let data = series.load()?.demean();
            let lag = match parse_lags(&lags)? {
                Some(p) => p,
                None => select_arch_lag(&data, 12.min(data.len() / 30).max(1))?,
            };
            let report = arch_lm_test(&data, lag, level)?;
            if format == "text" {
                print!("{}", arch_table_text(&report));
            } else {
                println!("{}", to_json(&report));
            }
            Ok(())
        }
        TestCommand::Adf {
            series,
            spec,
            max_lag,
            level,
            format,
        } => {
            let data = series.load()?;
            let specs: Vec<DeterministicSpec> = match spec.as_str() {
                "all" => DeterministicSpec::ALL.to_vec(),
                "none" => vec![DeterministicSpec::None],
                "constant" => vec![DeterministicSpec::Constant],
                "trend" => vec![DeterministicSpec::ConstantAndTrend],
                other => {
                    return Err(Error::ParseError {
                        path: "<args>".into(),
                        line: 0,
                        reason: format!("unknown spec `{other}`"),
                    })
                }
            };
            let max_lag = match parse_lags(&max_lag)? {
                Some(p) => p,
                None => (12.0 * (data.len() as f64 / 100.0).powf(0.25)).floor() as usize,
            };
            let diff = first_difference(&data)?;
            let mut rows = Vec::new();
            for (d, target) in [(0u32, &data), (1u32, &diff)] {
                for spec in &specs {
                    let mut report = adf_test(target, *spec, max_lag, level)?;
                    report.differencing_level = d;
                    rows.push(report);
                }
            }
            if format == "text" {
                print!("{}", adf_table_text("Unit root tests", &rows));
            } else {
                println!("{}", to_json(&rows));
            }
            Ok(())
        }
        TestCommand::Granger {
            x,
            y,
            lags,
            level,
            difference,
            fill,
            x_name,
            y_name,
            format,
        } => {
            let fill = parse_fill(&fill)?;
            let (xs, _) = read_series_csv(&x, fill)?;
            let (ys, _) = read_series_csv(&y, fill)?;
            let (xs, ys, _, _) = perpstat_core::series::align(
                &xs,
                &ys,
                &x.display().to_string(),
                &y.display().to_string(),
            )?;
            let (xs, ys) = if difference {
                (first_difference(&xs)?, first_difference(&ys)?)
            } else {
                (xs, ys)
            };
            let lag = match parse_lags(&lags)? {
                Some(p) => p,
                None => select_var_lag(&xs, &ys, 8.min(xs.len() / 40).max(1))?,
            };
            let (x_to_y, y_to_x) = granger_test(&xs, &ys, lag, level)?;
            if format == "text" {
                print!("{}", granger_table_text(&x_to_y, &y_to_x, &x_name, &y_name));
            } else {
                println!("{}", to_json(&(x_to_y, y_to_x)));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
