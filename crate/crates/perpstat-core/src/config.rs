//! Plain `key = value` configuration for the pipeline and the funding
//! engine. `#` starts a comment; unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funding::DenominatorMode;
use crate::ingest::FillPolicy;
use crate::volatility::Family;

/// Which pipeline stages run. Disabling a stage removes exactly its report
/// section; the forecast stage additionally needs the comparison stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageToggles {
    pub arch: bool,
    pub adf: bool,
    pub granger: bool,
    pub compare: bool,
    pub forecast: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            arch: true,
            adf: true,
            granger: true,
            compare: true,
            forecast: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Drives optimizer restarts; recorded in provenance.
    pub seed: u64,
    pub significance_level: f64,
    /// `None` selects the Schwert rule `12 (n/100)^{1/4}`.
    pub adf_max_lag: Option<usize>,
    /// `None` selects the lag by AIC.
    pub arch_lags: Option<usize>,
    /// `None` selects the lag by AIC on the bivariate system.
    pub granger_lags: Option<usize>,
    pub families: Vec<Family>,
    pub forecast_horizon: usize,
    pub fill: FillPolicy,
    pub stages: StageToggles,
    pub denominator: DenominatorMode,
    pub initial_margin: f64,
    pub maintenance_margin: f64,
    /// Funding timestamps (UTC hours). The published schedule lists 04:00,
    /// 12:00 and one ambiguous entry; 20:00 completes the 8-hour grid.
    pub funding_hours: Vec<u32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            significance_level: 0.05,
            adf_max_lag: None,
            arch_lags: None,
            granger_lags: None,
            families: Family::ALL.to_vec(),
            forecast_horizon: 30,
            fill: FillPolicy::Reject,
            stages: StageToggles::default(),
            denominator: DenominatorMode::Literal,
            initial_margin: 0.01,
            maintenance_margin: 0.005,
            funding_hours: vec![4, 12, 20],
        }
    }
}

impl PipelineConfig {
    /// Parse `key = value` text. Every key has a default; later lines win.
    pub fn parse(text: &str, source: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ParseError {
                path: source.to_string(),
                line: line_no,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |reason: String| Error::ParseError {
                path: source.to_string(),
                line: line_no,
                reason,
            };
            match key {
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| bad(format!("bad seed `{value}`")))?;
                }
                "level" => {
                    let level: f64 = value
                        .parse()
                        .map_err(|_| bad(format!("bad level `{value}`")))?;
                    if !(0.0..1.0).contains(&level) || level == 0.0 {
                        return Err(bad(format!("level {level} outside (0, 1)")));
                    }
                    cfg.significance_level = level;
                }
                "adf_max_lag" => cfg.adf_max_lag = parse_auto(value).map_err(bad)?,
                "arch_lags" => cfg.arch_lags = parse_auto(value).map_err(bad)?,
                "granger_lags" => cfg.granger_lags = parse_auto(value).map_err(bad)?,
                "families" => {
                    cfg.families = if value.eq_ignore_ascii_case("all") {
                        Family::ALL.to_vec()
                    } else {
                        value
                            .split(',')
                            .map(|f| f.trim().parse::<Family>())
                            .collect::<Result<Vec<Family>>>()
                            .map_err(|e| bad(e.to_string()))?
                    };
                }
                "horizon" => {
                    cfg.forecast_horizon = value
                        .parse()
                        .map_err(|_| bad(format!("bad horizon `{value}`")))?;
                }
                "fill" => {
                    cfg.fill = match value {
                        "reject" => FillPolicy::Reject,
                        "previous" => FillPolicy::Previous,
                        other => return Err(bad(format!("bad fill policy `{other}`"))),
                    };
                }
                "denominator" => {
                    cfg.denominator = match value {
                        "literal" => DenominatorMode::Literal,
                        "exchange" => DenominatorMode::Exchange,
                        other => return Err(bad(format!("bad denominator mode `{other}`"))),
                    };
                }
                "initial_margin" => {
                    cfg.initial_margin = value
                        .parse()
                        .map_err(|_| bad(format!("bad initial_margin `{value}`")))?;
                }
                "maintenance_margin" => {
                    cfg.maintenance_margin = value
                        .parse()
                        .map_err(|_| bad(format!("bad maintenance_margin `{value}`")))?;
                }
                "funding_hours" => {
                    cfg.funding_hours = value
                        .split(',')
                        .map(|h| h.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<u32>, _>>()
                        .map_err(|_| bad(format!("bad funding_hours `{value}`")))?;
                }
                _ if key.starts_with("stage.") => {
                    let enabled: bool = value
                        .parse()
                        .map_err(|_| bad(format!("bad stage toggle `{value}`")))?;
                    match &key[6..] {
                        "arch" => cfg.stages.arch = enabled,
                        "adf" => cfg.stages.adf = enabled,
                        "granger" => cfg.stages.granger = enabled,
                        "compare" => cfg.stages.compare = enabled,
                        "forecast" => cfg.stages.forecast = enabled,
                        other => return Err(bad(format!("unknown stage `{other}`"))),
                    }
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        PipelineConfig::parse(&text, &path.display().to_string())
    }

    /// Flat key/value view recorded in report provenance.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let auto = |v: &Option<usize>| match v {
            None => "auto".to_string(),
            Some(n) => n.to_string(),
        };
        map.insert("seed".into(), self.seed.to_string());
        map.insert("level".into(), self.significance_level.to_string());
        map.insert("adf_max_lag".into(), auto(&self.adf_max_lag));
        map.insert("arch_lags".into(), auto(&self.arch_lags));
        map.insert("granger_lags".into(), auto(&self.granger_lags));
        map.insert(
            "families".into(),
            self.families
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        map.insert("horizon".into(), self.forecast_horizon.to_string());
        map.insert(
            "fill".into(),
            match self.fill {
                FillPolicy::Reject => "reject".into(),
                FillPolicy::Previous => "previous".to_string(),
            },
        );
        map.insert(
            "denominator".into(),
            match self.denominator {
                DenominatorMode::Literal => "literal".into(),
                DenominatorMode::Exchange => "exchange".to_string(),
            },
        );
        map.insert("initial_margin".into(), self.initial_margin.to_string());
        map.insert(
            "maintenance_margin".into(),
            self.maintenance_margin.to_string(),
        );
        map.insert(
            "funding_hours".into(),
            self.funding_hours
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        for (stage, on) in [
            ("arch", self.stages.arch),
            ("adf", self.stages.adf),
            ("granger", self.stages.granger),
            ("compare", self.stages.compare),
            ("forecast", self.stages.forecast),
        ] {
            map.insert(format!("stage.{stage}"), on.to_string());
        }
        map
    }
}

fn parse_auto(value: &str) -> std::result::Result<Option<usize>, String> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("expected `auto` or an integer, found `{value}`"))
    }
}
