//! Roles and workflow-scoped activation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Declaration order is the fixed intra-round execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    TreatyInterpretation,
    ExposureUnderstanding,
    KnowledgeRetrieval,
    HazardModeling,
    ScenarioStress,
    ModelRisk,
    Pricing,
    Capital,
    PortfolioSteering,
    RetroStrategy,
    Claims,
    Compliance,
    AuditTrail,
    Governance,
    HumanOversight,
}

impl Role {
    pub const ALL: [Role; 15] = [
        Role::TreatyInterpretation,
        Role::ExposureUnderstanding,
        Role::KnowledgeRetrieval,
        Role::HazardModeling,
        Role::ScenarioStress,
        Role::ModelRisk,
        Role::Pricing,
        Role::Capital,
        Role::PortfolioSteering,
        Role::RetroStrategy,
        Role::Claims,
        Role::Compliance,
        Role::AuditTrail,
        Role::Governance,
        Role::HumanOversight,
    ];

    pub fn is_governance(self) -> bool {
        matches!(
            self,
            Role::Compliance | Role::AuditTrail | Role::Governance | Role::HumanOversight
        )
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned));
        f.write_str(s.as_deref().unwrap_or("?"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    Pricing,
    ClaimsEvaluation,
    RetrocessionOptimization,
    ExposureManagement,
    RegulatoryReporting,
}

impl Workflow {
    pub const ALL: [Workflow; 5] = [
        Workflow::Pricing,
        Workflow::ClaimsEvaluation,
        Workflow::RetrocessionOptimization,
        Workflow::ExposureManagement,
        Workflow::RegulatoryReporting,
    ];
}

/// Roles participating in a workflow. "Scenario/Footprint" in claims work is
/// served by the scenario role.
pub fn activate_roles(w: Workflow) -> BTreeSet<Role> {
    use Role::*;
    let roles: &[Role] = match w {
        Workflow::Pricing => &[
            TreatyInterpretation,
            ExposureUnderstanding,
            HazardModeling,
            Pricing,
            Capital,
            PortfolioSteering,
            Governance,
        ],
        Workflow::ClaimsEvaluation => &[
            TreatyInterpretation,
            Claims,
            ScenarioStress,
            AuditTrail,
            Governance,
        ],
        Workflow::RetrocessionOptimization => &[
            ScenarioStress,
            HazardModeling,
            Capital,
            RetroStrategy,
            PortfolioSteering,
            Governance,
        ],
        Workflow::ExposureManagement => &[
            ExposureUnderstanding,
            HazardModeling,
            ScenarioStress,
            PortfolioSteering,
            Capital,
            Governance,
        ],
        Workflow::RegulatoryReporting => &[Compliance, AuditTrail, Governance, HumanOversight],
    };
    roles.iter().copied().collect()
}
