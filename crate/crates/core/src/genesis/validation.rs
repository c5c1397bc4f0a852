//! Calibration statistics of a generated portfolio against market ranges.

use serde::{Deserialize, Serialize};

use super::{GenesisError, Portfolio};
use crate::money::Money;
use crate::stats;
use crate::treaty::{LineOfBusiness, Peril};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    pub value: f64,
    /// Dispersion across treaties where meaningful.
    pub sd: Option<f64>,
    pub low: f64,
    pub high: f64,
    pub pass: bool,
}

impl Check {
    fn new(quantity: &str, value: f64, sd: Option<f64>, (low, high): (f64, f64)) -> Self {
        Check {
            quantity: quantity.to_string(),
            value,
            sd,
            low,
            high,
            pass: value >= low && value <= high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const RATIO_RANGE: (f64, f64) = (0.40, 0.55);
pub const PROPERTY_CAT_RANGE: (f64, f64) = (0.55, 0.70);
pub const MULTI_PERIL_RANGE: (f64, f64) = (0.30, 0.40);
pub const TAIL_TO_CAPITAL_RANGE: (f64, f64) = (0.70, 0.85);

pub const RATIO: &str = "attachment_limit_ratio";
pub const PROPERTY_CAT_SHARE: &str = "property_cat_share";
pub const MULTI_PERIL_SHARE: &str = "multi_peril_share";
pub const TAIL_TO_CAPITAL: &str = "loss_1_in_200_to_capital";

/// `annual_losses[t][y]` is treaty `t`'s ceded aggregate in simulated year `y`
/// (minor units). The portfolio 1-in-200 is the 0.995 quantile of the yearly
/// sum across treaties.
pub fn validate_statistics(
    portfolio: &Portfolio,
    annual_losses: &[Vec<f64>],
    own_funds: Money,
) -> Result<ValidationReport, GenesisError> {
    let treaties = &portfolio.treaties;
    if treaties.is_empty() {
        return Err(GenesisError::EmptyPortfolio);
    }
    if annual_losses.len() != treaties.len() {
        return Err(GenesisError::Validation(format!(
            "{} loss series for {} treaties",
            annual_losses.len(),
            treaties.len()
        )));
    }
    let years = annual_losses[0].len();
    if years == 0 || annual_losses.iter().any(|l| l.len() != years) {
        return Err(GenesisError::Validation(
            "loss series must be non-empty and equally long".into(),
        ));
    }
    if own_funds <= Money::ZERO {
        return Err(GenesisError::Validation(
            "own funds must be positive".into(),
        ));
    }

    let ratios: Vec<f64> = treaties
        .iter()
        .map(|t| {
            let l = &t.terms.layers[0];
            l.attachment.as_f64() / l.limit.as_f64()
        })
        .collect();
    let ratio_mean = stats::mean(&ratios).expect("non-empty");
    let ratio_sd = if ratios.len() > 1 {
        stats::std_dev(&ratios).ok()
    } else {
        None
    };

    let n = treaties.len() as f64;
    let cat = treaties
        .iter()
        .filter(|t| t.terms.line_of_business == LineOfBusiness::PropertyCat)
        .count();
    let multi = treaties
        .iter()
        .filter(|t| t.terms.perils.contains(&Peril::Wind) && t.terms.perils.contains(&Peril::Flood))
        .count();

    let mut totals = vec![0.0; years];
    for series in annual_losses {
        for (acc, x) in totals.iter_mut().zip(series) {
            *acc += x;
        }
    }
    let tail = stats::quantile_in_place(&mut totals, 0.995).expect("non-empty");

    Ok(ValidationReport {
        checks: vec![
            Check::new(RATIO, ratio_mean, ratio_sd, RATIO_RANGE),
            Check::new(PROPERTY_CAT_SHARE, cat as f64 / n, None, PROPERTY_CAT_RANGE),
            Check::new(MULTI_PERIL_SHARE, multi as f64 / n, None, MULTI_PERIL_RANGE),
            Check::new(
                TAIL_TO_CAPITAL,
                tail / own_funds.as_f64(),
                None,
                TAIL_TO_CAPITAL_RANGE,
            ),
        ],
    })
}
