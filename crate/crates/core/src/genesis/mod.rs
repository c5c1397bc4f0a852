//! Synthetic portfolio generation: exposures clustered by zone, treaties with
//! paired wording and structure, and the calibration validator.

mod generator;
pub mod noisy;
pub mod validation;
pub mod wording;

use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::treaty::{LineOfBusiness, Treaty, ZoneId};

pub use generator::{generate_portfolio, AMOUNT_GRID};
pub use noisy::{parse_wording_noisy, NoiseModel, NoisyParseError};
pub use validation::{validate_statistics, Check, ValidationReport};
pub use wording::{parse_wording_exact, render_wording, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenesisError {
    #[error("generator configuration: {0}")]
    Config(String),
    #[error("cannot validate an empty portfolio")]
    EmptyPortfolio,
    #[error("validation: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalSpec {
    pub mu: f64,
    pub sigma: f64,
}

/// Gamma-Poisson location count per zone; smaller dispersion means more
/// uneven zones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountSpec {
    pub mean: f64,
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_treaties: usize,
    pub seed: u64,
    pub attachment_limit_ratio: MeanSd,
    pub property_cat_share: f64,
    /// Share of all treaties covering exactly windstorm and flood.
    pub multi_peril_share: f64,
    pub zone_count: usize,
    pub exposures_per_zone: CountSpec,
    /// Insured value per location, in major currency units.
    pub insured_value_distribution: LogNormalSpec,
    pub ambiguity_rate: f64,
    /// First-layer limit as a fraction of the treaty's subject insured value.
    pub limit_fraction: LogNormalSpec,
    pub two_layer_share: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_treaties: 500,
            seed: 1,
            attachment_limit_ratio: MeanSd {
                mean: 0.46,
                sd: 0.12,
            },
            property_cat_share: 0.61,
            multi_peril_share: 0.34,
            zone_count: 40,
            exposures_per_zone: CountSpec {
                mean: 30.0,
                dispersion: 4.0,
            },
            insured_value_distribution: LogNormalSpec {
                mu: 16.5,
                sigma: 1.0,
            },
            ambiguity_rate: 0.15,
            limit_fraction: LogNormalSpec {
                mu: -3.2,
                sigma: 0.45,
            },
            two_layer_share: 0.3,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenesisError> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(GenesisError::Config(format!(
                    "{name} = {v} is not in [0, 1]"
                )))
            }
        };
        frac("property_cat_share", self.property_cat_share)?;
        frac("multi_peril_share", self.multi_peril_share)?;
        frac("ambiguity_rate", self.ambiguity_rate)?;
        frac("two_layer_share", self.two_layer_share)?;
        if self.multi_peril_share > self.property_cat_share {
            return Err(GenesisError::Config(
                "multi_peril_share cannot exceed property_cat_share".into(),
            ));
        }
        if self.n_treaties == 0 {
            return Err(GenesisError::Config("n_treaties must be at least 1".into()));
        }
        if self.zone_count == 0 {
            return Err(GenesisError::Config("zone_count must be at least 1".into()));
        }
        if self.zone_count > 999 {
            return Err(GenesisError::Config("zone_count must be below 1000".into()));
        }
        let r = self.attachment_limit_ratio;
        if !(r.sd >= 0.0) || !(r.mean > 0.0) {
            return Err(GenesisError::Config(
                "attachment_limit_ratio needs mean > 0 and sd >= 0".into(),
            ));
        }
        let e = self.exposures_per_zone;
        if !(e.mean > 0.0 && e.dispersion > 0.0) {
            return Err(GenesisError::Config(
                "exposures_per_zone needs positive mean and dispersion".into(),
            ));
        }
        for (name, ln) in [
            (
                "insured_value_distribution",
                self.insured_value_distribution,
            ),
            ("limit_fraction", self.limit_fraction),
        ] {
            if !(ln.sigma >= 0.0 && ln.mu.is_finite()) {
                return Err(GenesisError::Config(format!(
                    "{name} needs finite mu and sigma >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub center: (f64, f64),
    pub coastal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub zone: ZoneId,
    pub coordinates: (f64, f64),
    pub insured_value: Money,
    pub line_of_business: LineOfBusiness,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExposureState {
    pub zones: Vec<Zone>,
    pub locations: Vec<Location>,
}

impl ExposureState {
    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    /// Total insured value per zone, indexed like `zones`.
    pub fn zone_tiv(&self) -> Vec<Money> {
        let mut tiv = vec![Money::ZERO; self.zones.len()];
        for loc in &self.locations {
            if let Some(i) = self.zone_index(loc.zone) {
                tiv[i] += loc.insured_value;
            }
        }
        tiv
    }

    pub fn zone_index(&self, id: ZoneId) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn total_insured_value(&self) -> Money {
        self.locations.iter().map(|l| l.insured_value).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub treaties: Vec<Treaty>,
    pub exposures: ExposureState,
}
