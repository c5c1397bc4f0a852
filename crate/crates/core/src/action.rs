//! Joint actions. Each entry belongs to one decision-making role; an absent
//! entry means that role has not acted (holds).

use serde::{Deserialize, Serialize};

use crate::folio::RetroStructure;
use crate::money::Money;
use crate::role::Role;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingAction {
    pub rate_on_line: f64,
    /// Signed line as a fraction of the treaty limit.
    pub share: f64,
    pub accept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapitalAction {
    pub allocated_capital: Money,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioAction {
    pub capacity_granted: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroAction {
    pub structure: Option<RetroStructure>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionProfile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing: Option<PricingAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capital: Option<CapitalAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<PortfolioAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retro: Option<RetroAction>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error("rate on line {0} outside [0, 1]")]
    Rate(f64),
    #[error("share {0} outside [0, 1]")]
    Share(f64),
    #[error("negative allocated capital")]
    Capital,
    #[error("negative capacity")]
    Capacity,
}

impl ActionProfile {
    /// Everyone holds.
    pub fn hold() -> Self {
        ActionProfile::default()
    }

    pub fn is_bind(&self) -> bool {
        self.pricing.is_some_and(|p| p.accept && p.share > 0.0)
    }

    /// Bound share; zero unless accepted.
    pub fn bound_share(&self) -> f64 {
        match self.pricing {
            Some(p) if p.accept => p.share,
            _ => 0.0,
        }
    }

    pub fn roles(&self) -> Vec<Role> {
        let mut r = Vec::new();
        if self.pricing.is_some() {
            r.push(Role::Pricing);
        }
        if self.capital.is_some() {
            r.push(Role::Capital);
        }
        if self.portfolio.is_some() {
            r.push(Role::PortfolioSteering);
        }
        if self.retro.is_some() {
            r.push(Role::RetroStrategy);
        }
        r
    }

    pub fn validate(&self) -> Result<(), ActionError> {
        if let Some(p) = self.pricing {
            if !(0.0..=1.0).contains(&p.rate_on_line) {
                return Err(ActionError::Rate(p.rate_on_line));
            }
            if !(0.0..=1.0).contains(&p.share) {
                return Err(ActionError::Share(p.share));
            }
        }
        if self
            .capital
            .is_some_and(|c| c.allocated_capital < Money::ZERO)
        {
            return Err(ActionError::Capital);
        }
        if self
            .portfolio
            .is_some_and(|c| c.capacity_granted < Money::ZERO)
        {
            return Err(ActionError::Capacity);
        }
        Ok(())
    }
}
