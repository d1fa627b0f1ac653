//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: {got} observations, need at least {need}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("value at index {index} is {value}, logarithm undefined for values <= 0")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("max lag {max_lag} too large for series of length {len} (must be < len/2)")]
    LagTooLarge { max_lag: usize, len: usize },

    #[error("series has zero variance, statistic undefined")]
    DegenerateSeries,

    #[error("timestamps not strictly increasing at index {index}")]
    UnorderedTimestamps { index: usize },

    #[error("gap at index {index}: expected spacing {expected}s, found {found}s")]
    UnevenSpacing {
        index: usize,
        expected: i64,
        found: i64,
    },

    #[error("aggregation window ending {window_end} has {got} of {need} samples")]
    IncompleteWindow {
        window_end: String,
        need: usize,
        got: usize,
    },

    #[error("window of {window}s is not a whole multiple of the {cadence}s cadence")]
    WindowNotMultiple { window: i64, cadence: i64 },

    #[error("series cadence is {got}s, operation requires {need}s")]
    WrongCadence { need: i64, got: i64 },

    #[error("premium index denominator is zero")]
    ZeroDenominator,

    #[error("clamp bounds inverted: lo {lo} > hi {hi}")]
    InvertedBounds { lo: f64, hi: f64 },

    #[error("invalid margin configuration: require 0 < maintenance {maintenance} < initial {initial} < 1")]
    InvalidMargin { initial: f64, maintenance: f64 },

    #[error("regressor matrix is rank deficient (pivot {pivot} below tolerance)")]
    RankDeficient { pivot: usize },

    #[error("underdetermined regression: {n_obs} observations for {n_params} parameters")]
    Underdetermined { n_obs: usize, n_params: usize },

    #[error("regressor column {index} has {got} rows, response has {need}")]
    DimensionMismatch {
        index: usize,
        need: usize,
        got: usize,
    },

    #[error("series are not aligned: {reason}")]
    MisalignedSeries { reason: String },

    #[error("invalid {family} parameters: {reason}")]
    InvalidParams { family: String, reason: String },

    #[error("model has not converged; refusing to forecast")]
    NotConverged,

    #[error("invalid significance level {level}, must be in (0, 1)")]
    InvalidLevel { level: f64 },

    #[error("{path}:{line}: {reason}")]
    ParseError {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("no overlapping timestamps between {left} and {right}")]
    AlignmentError { left: String, right: String },

    #[error("report is missing the {section} section required by the requested format")]
    IncompleteReport { section: String },

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Input errors (exit code 2) versus computation/stage errors (exit code 3).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::ParseError { .. }
                | Error::AlignmentError { .. }
                | Error::Io { .. }
                | Error::UnorderedTimestamps { .. }
                | Error::UnevenSpacing { .. }
        )
    }
}
