//! Cross-agent consistency checks and the validating agent.

use std::collections::BTreeSet;

use reinsim_core::action::{ActionProfile, CapitalAction, PortfolioAction, PricingAction};
use reinsim_core::genesis::parse_wording_exact;
use reinsim_core::message::{
    CritiqueBody, Issue, MessageId, MessageKind, MessageLog, Payload, StateFact, TypedMessage,
};
use reinsim_core::norms::check_feasible;
use reinsim_core::role::Role;
use reinsim_core::treaty::TreatyTerms;
use serde::{Deserialize, Serialize};

use crate::agents::{candidate_at, max_passing_share};
use crate::observe::BeliefState;
use crate::round::{Decision, Draft, Policy, Shared};

/// One inconsistency, addressed to the role expected to fix it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub to: Role,
    pub issue: Issue,
    pub refers_to: Option<MessageId>,
    pub max_share: Option<f64>,
    pub corrected_terms: Option<TreatyTerms>,
}

impl Flag {
    pub fn label(&self) -> String {
        match &self.issue {
            Issue::InterpretationMismatch { .. } => "interpretation_mismatch".into(),
            Issue::ScrMismatch { .. } => "scr_mismatch".into(),
            Issue::UnansweredViolation { norm_id } => format!("unanswered:{norm_id}"),
            Issue::ZoneAccumulation { .. } => "zone_accumulation".into(),
            Issue::TailVar { .. } => "tail_var".into(),
        }
    }
}

/// The proposal under review with the confirmations that answer it.
#[derive(Debug, Clone, Copy)]
pub struct Review<'a> {
    pub proposal: &'a TypedMessage,
    pub capital: Option<&'a TypedMessage>,
    pub portfolio: Option<&'a TypedMessage>,
}

impl Review<'_> {
    /// The joint action the proposal and its confirmations amount to.
    pub fn action(&self) -> ActionProfile {
        let mut a = ActionProfile::hold();
        if let Payload::Proposal(p) = &self.proposal.payload {
            a.pricing = Some(PricingAction {
                rate_on_line: p.rate_on_line,
                share: p.share,
                accept: p.accept,
            });
        }
        if let Some(Payload::State(StateFact::CapitalAssessment { allocated, .. })) =
            self.capital.map(|m| &m.payload)
        {
            a.capital = Some(CapitalAction {
                allocated_capital: *allocated,
            });
        }
        if let Some(Payload::State(StateFact::CapacityAssessment {
            capacity_granted, ..
        })) = self.portfolio.map(|m| &m.payload)
        {
            a.portfolio = Some(PortfolioAction {
                capacity_granted: *capacity_granted,
            });
        }
        a
    }

    fn share(&self) -> f64 {
        match &self.proposal.payload {
            Payload::Proposal(p) => p.share,
            _ => 0.0,
        }
    }
}

fn latest_interpretation(log: &MessageLog) -> Option<(&TypedMessage, &TreatyTerms)> {
    log.messages.iter().rev().find_map(|m| match &m.payload {
        Payload::State(StateFact::Interpretation { terms }) => Some((m, terms)),
        _ => None,
    })
}

fn confirms(m: &TypedMessage, sender: Role, share: f64) -> bool {
    m.sender == sender
        && match &m.payload {
            Payload::State(StateFact::CapitalAssessment { share: s, .. }) => *s == share,
            Payload::State(StateFact::CapacityAssessment { share: s, .. }) => *s == share,
            _ => false,
        }
}

/// The latest proposal together with its confirmations, once every
/// confirming role has answered it and nobody else has anything open.
pub fn ready_for_review<'a>(
    log: &'a MessageLog,
    confirmers: &[Role],
    reviewer: Option<Role>,
) -> Option<Review<'a>> {
    let proposal = log
        .messages
        .iter()
        .rev()
        .find(|m| m.kind == MessageKind::Proposal)?;
    let share = match &proposal.payload {
        Payload::Proposal(p) => p.share,
        _ => return None,
    };
    if latest_interpretation(log).is_some_and(|(m, _)| m.round >= proposal.round) {
        return None;
    }
    let after = || log.messages.iter().filter(|m| m.id > proposal.id);
    let find = |r: Role| after().rfind(|m| confirms(m, r, share));
    let capital = find(Role::Capital);
    let portfolio = find(Role::PortfolioSteering);
    for r in confirmers {
        let got = match r {
            Role::Capital => capital.is_some(),
            Role::PortfolioSteering => portfolio.is_some(),
            _ => true,
        };
        if !got {
            return None;
        }
    }
    if log.unresolved().any(|m| Some(m.sender) != reviewer) {
        return None;
    }
    Some(Review {
        proposal,
        capital,
        portfolio,
    })
}

/// Re-derives the treaty from its wording and the numbers from the
/// simulators, then compares with what the agents reported.
pub fn governance_check(
    shared: &Shared<'_>,
    belief: &BeliefState,
    log: &MessageLog,
    review: &Review<'_>,
) -> Vec<Flag> {
    let mut flags = Vec::new();
    let Some(exact) = belief
        .wording
        .as_deref()
        .and_then(|w| parse_wording_exact(w).ok())
    else {
        return flags;
    };
    match latest_interpretation(log) {
        Some((m, terms)) if *terms != exact => flags.push(Flag {
            to: Role::TreatyInterpretation,
            issue: Issue::InterpretationMismatch {
                fields: terms.interpretation_errors_against(&exact).max(1),
            },
            refers_to: Some(m.id),
            max_share: None,
            corrected_terms: Some(exact.clone()),
        }),
        _ => {}
    }
    // Downstream numbers rest on the reading; they are checked once it is fixed.
    if !flags.is_empty() {
        return flags;
    }
    let truth = shared.tools.assess(&exact);
    let share = review.share();
    if let Some(m) = review.capital {
        if let Payload::State(StateFact::CapitalAssessment { marginal_scr, .. }) = &m.payload {
            // Recomputed on the reading Capital was given.
            let reading = latest_interpretation(log).map_or(exact.clone(), |(_, t)| t.clone());
            let recomputed = shared.tools.assess(&reading).marginal_scr.at(share);
            let tol = belief.regulatory.as_ref().map_or(1e-6, |r| r.scr_tolerance);
            if (marginal_scr - recomputed).abs() > tol * recomputed.abs().max(1.0) {
                flags.push(Flag {
                    to: Role::Capital,
                    issue: Issue::ScrMismatch {
                        reported: *marginal_scr,
                        recomputed,
                    },
                    refers_to: Some(m.id),
                    max_share: None,
                    corrected_terms: None,
                });
            }
        }
    }
    let Some(state) = belief.hypothetical(&truth) else {
        return flags;
    };
    let action = review.action();
    let violated: BTreeSet<String> = match check_feasible(shared.norms, &state, &action, &[]) {
        Ok(f) => f.violated,
        Err(_) => shared.norms.norms.iter().map(|n| n.id.clone()).collect(),
    };
    if !violated.is_empty() {
        let rate = action.pricing.map_or(0.0, |p| p.rate_on_line);
        let s = max_passing_share(&shared.tools.shares, share - 1e-9, |s| {
            check_feasible(
                shared.norms,
                &state,
                &candidate_at(shared, &state, rate, s, true),
                &[],
            )
            .is_ok_and(|f| f.feasible)
        });
        for norm_id in violated {
            flags.push(Flag {
                to: Role::Pricing,
                issue: Issue::UnansweredViolation { norm_id },
                refers_to: Some(review.proposal.id),
                max_share: Some(s),
                corrected_terms: None,
            });
        }
    }
    flags
}

/// Validates each settled proposal; any flag goes back out as a critique.
#[derive(Default)]
pub struct GovernanceAgent {
    reviewed: BTreeSet<MessageId>,
    pub flags_raised: usize,
}

impl Policy for GovernanceAgent {
    fn role(&self) -> Role {
        Role::Governance
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        log: Option<&MessageLog>,
        belief: &BeliefState,
        _: &[TypedMessage],
    ) -> Decision {
        let mut d = Decision::default();
        let Some(log) = log else { return d };
        let roles: BTreeSet<Role> = shared.graph.edges.iter().map(|(a, _)| *a).collect();
        let confirmers = crate::agents::confirming_roles(&roles);
        let Some(review) = ready_for_review(log, &confirmers, Some(Role::Governance)) else {
            return d;
        };
        if !self.reviewed.insert(review.proposal.id) {
            return d;
        }
        let flags = governance_check(shared, belief, log, &review);
        let to = shared.graph.neighbours(Role::Governance);
        if flags.is_empty() {
            let fact = StateFact::Validation {
                passed: true,
                flags: Vec::new(),
            };
            d.messages
                .push(Draft::to(to, Payload::State(fact)).closing_open());
            return d;
        }
        self.flags_raised += flags.len();
        for f in flags {
            let body = CritiqueBody {
                issue: f.issue,
                refers_to: f.refers_to,
                max_share: f.max_share,
                corrected_terms: f.corrected_terms,
            };
            d.messages.push(Draft::to([f.to], Payload::Critique(body)));
        }
        d
    }
}
