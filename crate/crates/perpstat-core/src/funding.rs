//! Perpetual-swap funding mechanics: the interest component, the order-book
//! premium index, the dampener clamp, the margin cap and the resulting
//! funding payment.
//!
//! Sign conventions: a positive funding rate means longs pay shorts; a
//! negative rate means shorts pay longs. Rates are decimal fractions per
//! funding period (8 hours in the standard configuration).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::FUNDING_PERIOD_SECS;

/// Width of the dampener applied to `I - P` (±0.05%).
pub const DAMPENER: f64 = 0.0005;
/// Fraction of the margin spread that caps the absolute funding rate.
pub const CAP_FRACTION: f64 = 0.75;

/// Daily borrow-rate indices for the two legs of the contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestInputs {
    /// Borrow rate of the quote currency, decimal per day.
    pub quote_index: f64,
    /// Borrow rate of the base currency, decimal per day.
    pub base_index: f64,
    /// Funding periods per day; 3 in the standard configuration.
    pub funding_interval_count: u32,
}

/// Order-book and mark/index state needed for one premium-index sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiumInputs {
    /// Average fill price to execute the impact notional against the bids.
    pub impact_bid_price: f64,
    /// Average fill price to execute the impact notional against the asks.
    pub impact_ask_price: f64,
    pub mark_price: f64,
    /// Index (spot composite) price.
    pub spot_price: f64,
    /// Funding rate currently in force, decimal per period.
    pub current_funding_rate: f64,
    /// Seconds until the next funding timestamp; at most one period.
    pub time_until_funding_secs: i64,
}

impl PremiumInputs {
    fn validate(&self) -> Result<()> {
        let ok = self.impact_bid_price > 0.0
            && self.impact_ask_price > 0.0
            && self.mark_price > 0.0
            && self.spot_price > 0.0
            && self.impact_bid_price <= self.impact_ask_price
            && (0..=FUNDING_PERIOD_SECS).contains(&self.time_until_funding_secs);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams {
                family: "premium inputs".into(),
                reason: "prices must be positive, bid <= ask, time until funding within one period"
                    .into(),
            })
        }
    }
}

/// Which composition of the fair-basis denominator to use.
///
/// The literal reading of the published formulas adds the full fair basis to
/// the spot price, making the denominator roughly twice spot. The exchange's
/// own implementation divides by `spot * (1 + funding_basis)`. Both are
/// available; the literal form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    #[default]
    Literal,
    Exchange,
}

/// Opening and minimum collateral fractions; their spread caps the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginConfig {
    pub initial_margin: f64,
    pub maintenance_margin: f64,
}

impl MarginConfig {
    pub fn new(initial_margin: f64, maintenance_margin: f64) -> Result<Self> {
        if 0.0 < maintenance_margin && maintenance_margin < initial_margin && initial_margin < 1.0
        {
            Ok(MarginConfig {
                initial_margin,
                maintenance_margin,
            })
        } else {
            Err(Error::InvalidMargin {
                initial: initial_margin,
                maintenance: maintenance_margin,
            })
        }
    }

    /// `0.75 * (initial - maintenance)`, the absolute funding-rate cap.
    pub fn cap_bound(&self) -> f64 {
        CAP_FRACTION * (self.initial_margin - self.maintenance_margin)
    }
}

/// Every intermediate of one funding-rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingBreakdown {
    /// Interest component I, decimal per period.
    pub interest_component: f64,
    /// Premium index P (already TWAP-averaged by the caller).
    pub premium_index: f64,
    /// `clamp(I - P, +0.05%, -0.05%)`.
    pub clamp_value: f64,
    /// Final funding rate after the margin cap.
    pub funding_rate: f64,
    /// Whether the margin cap changed the rate.
    pub capped: bool,
    /// The cap bound that applied.
    pub cap_bound: f64,
}

/// Per-period interest component: `(quote - base) / intervals`.
pub fn interest_rate(inputs: &InterestInputs) -> f64 {
    (inputs.quote_index - inputs.base_index) / inputs.funding_interval_count as f64
}

/// Premium index from impact prices, mark and spot.
///
/// The funding basis prorates the current rate by the time left in the
/// period; the numerator measures how far the mark sits outside the
/// impact bid/ask band.
pub fn premium_index(inputs: &PremiumInputs, mode: DenominatorMode) -> Result<f64> {
    inputs.validate()?;
    let funding_basis = inputs.current_funding_rate * inputs.time_until_funding_secs as f64
        / FUNDING_PERIOD_SECS as f64;
    let fair_basis = inputs.spot_price * (1.0 + funding_basis);
    let denominator = match mode {
        DenominatorMode::Literal => inputs.spot_price + fair_basis,
        DenominatorMode::Exchange => fair_basis,
    };
    if denominator.abs() < f64::EPSILON * inputs.spot_price {
        return Err(Error::ZeroDenominator);
    }
    let numerator = (inputs.impact_bid_price - inputs.mark_price).max(0.0)
        - (inputs.mark_price - inputs.impact_ask_price).max(0.0);
    Ok(numerator / denominator)
}

/// `min(hi, max(lo, x))`.
pub fn clamp(x: f64, hi: f64, lo: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::InvertedBounds { lo, hi });
    }
    Ok(x.max(lo).min(hi))
}

/// Combine the period TWAPs of I and P into the funding rate:
/// `F = P + clamp(I - P, +0.05%, -0.05%)`, then cap `|F|` at
/// `0.75 * (initial margin - maintenance margin)`.
pub fn funding_rate(interest: f64, premium_twap: f64, margin: &MarginConfig) -> FundingBreakdown {
    let clamp_value = (interest - premium_twap).clamp(-DAMPENER, DAMPENER);
    let uncapped = premium_twap + clamp_value;
    let cap_bound = margin.cap_bound();
    let (rate, capped) = if uncapped.abs() > cap_bound {
        (uncapped.signum() * cap_bound, true)
    } else {
        (uncapped, false)
    };
    FundingBreakdown {
        interest_component: interest,
        premium_index: premium_twap,
        clamp_value,
        funding_rate: rate,
        capped,
        cap_bound,
    }
}

/// Funding amount exchanged at the timestamp: `position value * F`.
/// Positive means the long side pays; negative means the short side pays.
pub fn funding_payment(position_value: f64, breakdown: &FundingBreakdown) -> f64 {
    position_value * breakdown.funding_rate
}

/// One period's funding outcome, stamped with its funding timestamp.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FundingPeriod {
    pub timestamp: chrono::DateTime<chrono::Utc>,
    #[serde(flatten)]
    pub breakdown: FundingBreakdown,
}

/// Validate a funding schedule (evenly spaced UTC hours) and return the
/// window length and anchor in seconds.
pub fn schedule_window(hours: &[u32]) -> Result<(i64, i64)> {
    let mut sorted = hours.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let ok = !sorted.is_empty()
        && sorted.iter().all(|h| *h < 24)
        && 24 % sorted.len() == 0
        && sorted
            .windows(2)
            .all(|w| (w[1] - w[0]) as usize == 24 / sorted.len());
    if !ok {
        return Err(Error::InvalidParams {
            family: "funding schedule".into(),
            reason: format!("hours {hours:?} must be evenly spaced within the day"),
        });
    }
    let window = 24 * 3600 / sorted.len() as i64;
    let anchor = sorted[0] as i64 * 3600;
    Ok((window, anchor))
}

/// Turn minute-level samples of the interest component and the premium index
/// into one [`FundingBreakdown`] per funding period: TWAP both series over
/// the period window, then apply the dampener and the margin cap.
pub fn funding_schedule(
    interest: &crate::series::Series,
    premium: &crate::series::Series,
    margin: &MarginConfig,
    hours: &[u32],
) -> Result<Vec<FundingPeriod>> {
    if interest.timestamps() != premium.timestamps() {
        return Err(Error::MisalignedSeries {
            reason: "interest and premium samples must share timestamps".into(),
        });
    }
    let (window, anchor) = schedule_window(hours)?;
    let i_twap = crate::series::twap_anchored(interest, window, anchor)?;
    let p_twap = crate::series::twap_anchored(premium, window, anchor)?;
    Ok(i_twap
        .timestamps()
        .iter()
        .zip(i_twap.values())
        .zip(p_twap.values())
        .map(|((ts, i), p)| FundingPeriod {
            timestamp: *ts,
            breakdown: funding_rate(*i, *p, margin),
        })
        .collect())
}
