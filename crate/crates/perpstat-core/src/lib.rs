//! Funding-rate mechanics for perpetual swaps plus the econometrics pipeline
//! used to study them: heteroskedasticity (ARCH LM) testing, unit-root (ADF)
//! testing, Granger causality and GARCH-family volatility modelling with
//! information-criterion selection and variance forecasting.
//!
//! The crate is organized around [`series::Series`], an evenly spaced
//! timestamped series that every statistical operation consumes and produces.

pub mod adf;
pub mod arch;
pub mod config;
pub mod error;
pub mod funding;
pub mod granger;
pub mod ingest;
pub mod optimize;
pub mod pipeline;
pub mod regression;
pub mod series;
pub mod volatility;

pub use error::{Error, Result};
pub use series::Series;
