//! The composite global state and its seven views.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::capital::CapitalState;
use crate::folio::{ClaimEvent, PortfolioState, TreatyLosses};
use crate::genesis::ExposureState;
use crate::money::Money;
use crate::perils::HazardState;
use crate::treaty::{Treaty, TreatyId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatyState {
    /// Ground truth: the wording and the structure it encodes.
    pub treaty: Treaty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardView {
    pub simulation: Arc<HazardState>,
    /// The treaty under negotiation run through the simulation.
    pub candidate: Option<TreatyLosses>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClaimsState {
    pub events: Vec<ClaimEvent>,
    pub recoveries: BTreeMap<TreatyId, Money>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegulatoryState {
    pub solvency_threshold: f64,
    pub max_rounds: u32,
    /// Relative gap tolerated between a reported and a recomputed SCR.
    pub scr_tolerance: f64,
}

impl Default for RegulatoryState {
    fn default() -> Self {
        RegulatoryState {
            solvency_threshold: 1.0,
            max_rounds: 20,
            scr_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("solvency threshold must be positive, got {0}")]
    Threshold(f64),
    #[error("max_rounds must be at least 1")]
    Rounds,
    #[error("scr tolerance must be non-negative, got {0}")]
    Tolerance(f64),
}

impl RegulatoryState {
    pub fn validate(&self) -> Result<(), StateError> {
        if !(self.solvency_threshold > 0.0) || !self.solvency_threshold.is_finite() {
            return Err(StateError::Threshold(self.solvency_threshold));
        }
        if self.max_rounds == 0 {
            return Err(StateError::Rounds);
        }
        if !(self.scr_tolerance >= 0.0) {
            return Err(StateError::Tolerance(self.scr_tolerance));
        }
        Ok(())
    }
}

/// Seven views; the heavy shared simulation outputs sit behind `Arc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalState {
    pub treaty_view: TreatyState,
    pub exposure_view: Arc<ExposureState>,
    pub hazard_view: HazardView,
    pub capital_view: CapitalState,
    pub portfolio_view: PortfolioState,
    pub claims_view: ClaimsState,
    pub regulatory_view: RegulatoryState,
}

impl GlobalState {
    pub fn validate(&self) -> Result<(), StateError> {
        self.regulatory_view.validate()
    }
}

/// Component names, used for observation masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Treaty,
    Exposure,
    Hazard,
    Capital,
    Portfolio,
    Claims,
    Regulatory,
}

impl View {
    pub const ALL: [View; 7] = [
        View::Treaty,
        View::Exposure,
        View::Hazard,
        View::Capital,
        View::Portfolio,
        View::Claims,
        View::Regulatory,
    ];
}
