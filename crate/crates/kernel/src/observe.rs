//! Observation masks and belief states.

use std::collections::BTreeSet;
use std::sync::Arc;

use reinsim_core::audit::Digest;
use reinsim_core::capital::CapitalState;
use reinsim_core::folio::PortfolioState;
use reinsim_core::genesis::ExposureState;
use reinsim_core::message::{MessageId, TypedMessage};
use reinsim_core::role::Role;
use reinsim_core::state::{
    ClaimsState, GlobalState, HazardView, RegulatoryState, TreatyState, View,
};
use reinsim_core::treaty::{Treaty, TreatyId};
use sha2::{Digest as _, Sha256};

use crate::world::Assessment;

/// Views each role may observe. The treaty view is observed as wording
/// text only; its structure has to be read.
pub fn mask(role: Role) -> BTreeSet<View> {
    use View::*;
    let views: &[View] = match role {
        Role::TreatyInterpretation | Role::KnowledgeRetrieval => &[Treaty],
        Role::ExposureUnderstanding => &[Treaty, Exposure],
        Role::HazardModeling => &[Exposure, Hazard],
        Role::ScenarioStress | Role::ModelRisk => &[Exposure, Hazard],
        Role::Pricing => &[Hazard, Capital, Regulatory],
        Role::Capital => &[Hazard, Capital, Portfolio, Regulatory],
        Role::PortfolioSteering => &[Exposure, Hazard, Portfolio],
        Role::RetroStrategy => &[Hazard, Capital, Portfolio],
        Role::Claims => &[Treaty, Claims],
        Role::Compliance => &[Capital, Regulatory],
        Role::AuditTrail => &[],
        Role::Governance | Role::HumanOversight => &View::ALL,
    };
    views.iter().copied().collect()
}

/// Whether the role also reads the episode log.
pub fn reads_log(role: Role) -> bool {
    matches!(
        role,
        Role::Governance | Role::HumanOversight | Role::AuditTrail
    )
}

#[derive(Debug, Clone, Default)]
pub struct BeliefState {
    pub role: Option<Role>,
    pub treaty_id: Option<TreatyId>,
    pub wording: Option<String>,
    pub exposure: Option<Arc<ExposureState>>,
    pub hazard: Option<HazardView>,
    pub capital: Option<CapitalState>,
    pub portfolio: Option<PortfolioState>,
    pub claims: Option<ClaimsState>,
    pub regulatory: Option<RegulatoryState>,
    /// Running digest over every message received.
    pub inbox_digest: Digest,
    /// Ids received, per round.
    pub history: Vec<(u32, Vec<MessageId>)>,
}

impl BeliefState {
    pub fn visible(&self) -> BTreeSet<View> {
        let mut v = BTreeSet::new();
        if self.wording.is_some() {
            v.insert(View::Treaty);
        }
        if self.exposure.is_some() {
            v.insert(View::Exposure);
        }
        if self.hazard.is_some() {
            v.insert(View::Hazard);
        }
        if self.capital.is_some() {
            v.insert(View::Capital);
        }
        if self.portfolio.is_some() {
            v.insert(View::Portfolio);
        }
        if self.claims.is_some() {
            v.insert(View::Claims);
        }
        if self.regulatory.is_some() {
            v.insert(View::Regulatory);
        }
        v
    }

    pub fn receive(&mut self, round: u32, inbox: &[TypedMessage]) {
        let mut h = Sha256::new();
        h.update(self.inbox_digest);
        for m in inbox {
            h.update(serde_json::to_vec(m).expect("messages serialise"));
        }
        self.inbox_digest = h.finalize().into();
        self.history
            .push((round, inbox.iter().map(|m| m.id).collect()));
    }

    /// The state this agent believes in if the treaty reads as `a` says.
    /// Views it cannot see stay at their defaults; without the hazard view
    /// there is nothing to evaluate.
    pub fn hypothetical(&self, a: &Assessment) -> Option<GlobalState> {
        let hazard = self.hazard.as_ref()?;
        let mut capital_view = self.capital.clone().unwrap_or_default();
        capital_view.marginal_scr = a.marginal_scr.clone();
        capital_view.charge = a.charge.clone();
        let mut portfolio_view = self.portfolio.clone().unwrap_or_default();
        portfolio_view.tail_var_with = a.tail_var_with.clone();
        Some(GlobalState {
            treaty_view: TreatyState {
                treaty: Treaty {
                    terms: a.terms.clone(),
                    wording: self.wording.clone().unwrap_or_default(),
                },
            },
            exposure_view: self.exposure.clone().unwrap_or_default(),
            hazard_view: HazardView {
                simulation: hazard.simulation.clone(),
                candidate: Some(a.losses.clone()),
            },
            capital_view,
            portfolio_view,
            claims_view: self.claims.clone().unwrap_or_default(),
            regulatory_view: self.regulatory.clone().unwrap_or_default(),
        })
    }
}

/// The masked projection of `s` for `role`. Simulator outputs for the
/// treaty itself are withheld: each agent runs its own reading through the
/// tools.
pub fn observe(s: &GlobalState, role: Role) -> BeliefState {
    observe_views(s, &mask(role), Some(role))
}

/// Every view, for a monolithic pipeline that has no role split.
pub fn observe_full(s: &GlobalState) -> BeliefState {
    observe_views(s, &View::ALL.into_iter().collect(), None)
}

fn observe_views(s: &GlobalState, m: &BTreeSet<View>, role: Option<Role>) -> BeliefState {
    let has = |v: View| m.contains(&v);
    let mut capital = s.capital_view.clone();
    capital.marginal_scr = Default::default();
    capital.charge = Default::default();
    let mut portfolio = s.portfolio_view.clone();
    portfolio.tail_var_with = Default::default();
    BeliefState {
        role,
        treaty_id: has(View::Treaty).then(|| s.treaty_view.treaty.terms.id.clone()),
        wording: has(View::Treaty).then(|| s.treaty_view.treaty.wording.clone()),
        exposure: has(View::Exposure).then(|| s.exposure_view.clone()),
        hazard: has(View::Hazard).then(|| HazardView {
            simulation: s.hazard_view.simulation.clone(),
            candidate: None,
        }),
        capital: has(View::Capital).then_some(capital),
        portfolio: has(View::Portfolio).then_some(portfolio),
        claims: has(View::Claims).then(|| s.claims_view.clone()),
        regulatory: has(View::Regulatory).then(|| s.regulatory_view.clone()),
        inbox_digest: [0u8; 32],
        history: Vec::new(),
    }
}
