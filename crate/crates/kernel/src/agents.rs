//! Deterministic parametric policies for the pricing workflow.

use std::collections::{BTreeMap, BTreeSet};

use reinsim_core::action::{ActionProfile, CapitalAction, PortfolioAction, PricingAction};
use reinsim_core::genesis::noisy::{parse_wording_noisy, NoiseModel};
use reinsim_core::genesis::wording::parse_wording_exact;
use reinsim_core::message::{
    ConstraintBody, CritiqueBody, Issue, MessageLog, Payload, ProposalBody, StateFact, TypedMessage,
};
use reinsim_core::norms::{check_feasible, Snapshot};
use reinsim_core::rng::SimRng;
use reinsim_core::role::Role;
use reinsim_core::state::GlobalState;
use reinsim_core::treaty::TreatyTerms;
use reinsim_core::Money;

use crate::observe::BeliefState;
use crate::round::{Decision, Draft, Policy, Shared};
use crate::world::Assessment;

const SHARE_EPS: f64 = 1e-12;

/// Smallest capacity, in whole minor units, that covers the line.
pub fn capacity_for(share: f64, limit: Money) -> Money {
    Money((share * limit.as_f64()).ceil() as i64)
}

/// Largest grid share not above `x`; zero if none.
pub fn snap_down(shares: &[f64], x: f64) -> f64 {
    shares
        .iter()
        .copied()
        .filter(|s| *s <= x + SHARE_EPS)
        .fold(0.0, f64::max)
}

/// Largest positive grid share not above `cap` that passes; zero if none.
pub fn max_passing_share(shares: &[f64], cap: f64, pass: impl Fn(f64) -> bool) -> f64 {
    let mut sorted: Vec<f64> = shares
        .iter()
        .copied()
        .filter(|s| *s > 0.0 && *s <= cap + SHARE_EPS)
        .collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.into_iter().find(|s| pass(*s)).unwrap_or(0.0)
}

/// Capital the treaty would be given at `share`: the least allocation that
/// meets the threshold, capped at the budget.
pub fn allocation_at(shared: &Shared<'_>, state: &GlobalState, share: f64) -> Money {
    let charge = state.capital_view.charge.at(share);
    let needed = shared
        .pricing
        .required_allocation(charge, state.regulatory_view.solvency_threshold);
    needed.min(state.capital_view.allocation_budget)
}

/// The bind a confirming agent has in mind for a proposal at `share`.
pub fn candidate_at(
    shared: &Shared<'_>,
    state: &GlobalState,
    rate: f64,
    share: f64,
    accept: bool,
) -> ActionProfile {
    let limit = state.treaty_view.treaty.terms.total_limit();
    ActionProfile {
        pricing: Some(PricingAction {
            rate_on_line: rate,
            share,
            accept,
        }),
        capital: Some(CapitalAction {
            allocated_capital: allocation_at(shared, state, share),
        }),
        portfolio: Some(PortfolioAction {
            capacity_granted: capacity_for(share, limit),
        }),
        retro: None,
    }
}

/// Norms owned by `role` that `a` breaks in `state`.
pub fn own_violations(
    shared: &Shared<'_>,
    role: Role,
    state: &GlobalState,
    a: &ActionProfile,
) -> Vec<String> {
    let owned = shared.owned_by(role);
    match check_feasible(shared.norms, state, a, &[]) {
        Ok(f) => f
            .violated
            .into_iter()
            .filter(|id| owned.contains(id))
            .collect(),
        Err(_) => owned.into_iter().collect(),
    }
}

fn latest_interpretation(inbox: &[TypedMessage]) -> Option<&TreatyTerms> {
    inbox.iter().rev().find_map(|m| match &m.payload {
        Payload::State(StateFact::Interpretation { terms }) => Some(terms),
        _ => None,
    })
}

fn latest_proposal(inbox: &[TypedMessage]) -> Option<(u64, &ProposalBody)> {
    inbox.iter().rev().find_map(|m| match &m.payload {
        Payload::Proposal(p) => Some((m.id, p)),
        _ => None,
    })
}

/// Does nothing. Fills roles that are active but idle in a workflow.
pub struct Passive(pub Role);

impl Policy for Passive {
    fn role(&self) -> Role {
        self.0
    }

    fn step(
        &mut self,
        _: u32,
        _: &Shared<'_>,
        _: Option<&MessageLog>,
        _: &BeliefState,
        _: &[TypedMessage],
    ) -> Decision {
        Decision::default()
    }
}

/// Reads the wording once, then adopts corrected readings sent back to it.
pub struct Interpreter {
    pub noise: NoiseModel,
    rng: SimRng,
    terms: Option<TreatyTerms>,
    read: bool,
}

impl Interpreter {
    pub fn new(noise: NoiseModel, rng: SimRng) -> Self {
        Interpreter {
            noise,
            rng,
            terms: None,
            read: false,
        }
    }

    pub fn terms(&self) -> Option<&TreatyTerms> {
        self.terms.as_ref()
    }
}

impl Policy for Interpreter {
    fn role(&self) -> Role {
        Role::TreatyInterpretation
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        belief: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision {
        let mut changed = false;
        if !self.read {
            self.read = true;
            if let Some(w) = &belief.wording {
                if let Ok(t) = parse_wording_noisy(w, &self.noise, &mut self.rng) {
                    self.terms = Some(t);
                    changed = true;
                }
            }
        }
        for m in inbox {
            if let Payload::Critique(CritiqueBody {
                corrected_terms: Some(t),
                ..
            }) = &m.payload
            {
                if self.terms.as_ref() != Some(t) {
                    self.terms = Some(t.clone());
                    changed = true;
                }
            }
        }
        let mut d = Decision::default();
        if let (true, Some(t)) = (changed, &self.terms) {
            let to = shared.graph.neighbours(Role::TreatyInterpretation);
            d.messages.push(Draft::to(
                to,
                Payload::State(StateFact::Interpretation { terms: t.clone() }),
            ));
        }
        d
    }
}

/// Reports the insured values the treaty's territory and class cover.
#[derive(Default)]
pub struct ExposureReader {
    done: bool,
}

impl Policy for ExposureReader {
    fn role(&self) -> Role {
        Role::ExposureUnderstanding
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        belief: &BeliefState,
        _: &[TypedMessage],
    ) -> Decision {
        let mut d = Decision::default();
        if self.done {
            return d;
        }
        self.done = true;
        let (Some(w), Some(exp)) = (&belief.wording, &belief.exposure) else {
            return d;
        };
        let Ok(t) = parse_wording_exact(w) else {
            return d;
        };
        let covered: Vec<_> = exp
            .locations
            .iter()
            .filter(|l| t.zones.contains(&l.zone) && l.line_of_business == t.line_of_business)
            .collect();
        let fact = StateFact::Exposure {
            subject_tiv: covered.iter().map(|l| l.insured_value).sum(),
            locations: covered.len(),
        };
        d.messages.push(Draft::to(
            shared.graph.neighbours(Role::ExposureUnderstanding),
            Payload::State(fact),
        ));
        d
    }
}

/// Runs each new reading through the hazard sample.
#[derive(Default)]
pub struct HazardModeler;

impl Policy for HazardModeler {
    fn role(&self) -> Role {
        Role::HazardModeling
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        _: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision {
        let mut d = Decision::default();
        if let Some(terms) = latest_interpretation(inbox) {
            let a = shared.tools.assess(terms);
            let fact = StateFact::Hazard {
                expected_loss: a.expected_loss,
                sd: a.sd,
                attach_probability: a.attach_probability,
            };
            d.messages.push(Draft::to(
                shared.graph.neighbours(Role::HazardModeling),
                Payload::State(fact),
            ));
        }
        d
    }
}

/// Quotes the technical rate at the largest share every objector allows.
#[derive(Default)]
pub struct Pricer {
    terms: Option<TreatyTerms>,
    hazard_ready: bool,
    limits: BTreeMap<Role, f64>,
    last: Option<ProposalBody>,
    revision: u32,
}

impl Pricer {
    pub fn quote(shared: &Shared<'_>, a: &Assessment, share: f64) -> f64 {
        let charge = a.charge.at(share);
        shared
            .pricing
            .technical_rate(a.expected_loss, a.sd, charge, share, a.terms.total_limit())
    }
}

impl Policy for Pricer {
    fn role(&self) -> Role {
        Role::Pricing
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        _: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision {
        let mut fresh = false;
        for m in inbox {
            match &m.payload {
                Payload::State(StateFact::Interpretation { terms }) => {
                    self.terms = Some(terms.clone());
                    self.limits.clear();
                    self.hazard_ready = false;
                }
                Payload::State(StateFact::Hazard { .. }) => {
                    self.hazard_ready = true;
                    fresh = true;
                }
                Payload::Constraint(ConstraintBody {
                    max_share: Some(x), ..
                })
                | Payload::Critique(CritiqueBody {
                    max_share: Some(x), ..
                }) => {
                    self.limits.insert(m.sender, *x);
                }
                _ => {}
            }
        }
        let mut d = Decision::default();
        let Some(terms) = &self.terms else { return d };
        if !self.hazard_ready {
            return d;
        }
        let cap = self.limits.values().copied().fold(1.0, f64::min);
        let share = snap_down(&shared.tools.shares, cap);
        if share <= 0.0 {
            return d;
        }
        if !fresh && self.last.as_ref().is_some_and(|p| p.share == share) {
            return d;
        }
        let a = shared.tools.assess(terms);
        let rate = Pricer::quote(shared, &a, share);
        self.revision += 1;
        let body = ProposalBody {
            rate_on_line: rate,
            share,
            accept: true,
            technical_rate: rate,
            revision: self.revision,
        };
        self.last = Some(body.clone());
        d.action.pricing = Some(PricingAction {
            rate_on_line: rate,
            share,
            accept: true,
        });
        d.messages.push(Draft::to(
            shared.graph.neighbours(Role::Pricing),
            Payload::Proposal(body),
        ));
        d
    }
}

/// Checks proposals against the capital norms it owns.
#[derive(Default)]
pub struct CapitalAgent {
    terms: Option<TreatyTerms>,
}

impl Policy for CapitalAgent {
    fn role(&self) -> Role {
        Role::Capital
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        belief: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision {
        if let Some(t) = latest_interpretation(inbox) {
            self.terms = Some(t.clone());
        }
        let mut d = Decision::default();
        let (Some(terms), Some((pid, p))) = (&self.terms, latest_proposal(inbox)) else {
            return d;
        };
        let a = shared.tools.assess(terms);
        let Some(state) = belief.hypothetical(&a) else {
            return d;
        };
        let cand = |s: f64| candidate_at(shared, &state, p.rate_on_line, s, p.accept);
        let violated = own_violations(shared, Role::Capital, &state, &cand(p.share));
        match violated.first() {
            None => {
                let allocated = allocation_at(shared, &state, p.share);
                let fact = StateFact::CapitalAssessment {
                    share: p.share,
                    marginal_scr: a.marginal_scr.at(p.share),
                    charge: a.charge.at(p.share),
                    allocated,
                };
                d.action.capital = Some(CapitalAction {
                    allocated_capital: allocated,
                });
                d.messages.push(
                    Draft::to(shared.graph.neighbours(Role::Capital), Payload::State(fact))
                        .closing_open(),
                );
            }
            Some(norm) => {
                let below = p.share - 1e-9;
                let s = max_passing_share(&shared.tools.shares, below, |s| {
                    own_violations(shared, Role::Capital, &state, &cand(s)).is_empty()
                });
                let body = ConstraintBody {
                    norm_id: norm.clone(),
                    refers_to: Some(pid),
                    max_share: Some(s),
                    min_rate: None,
                };
                d.messages
                    .push(Draft::to([Role::Pricing], Payload::Constraint(body)).closing_open());
            }
        }
        d
    }
}

/// Checks proposals against accumulation, tail and capacity appetite.
#[derive(Default)]
pub struct PortfolioAgent {
    terms: Option<TreatyTerms>,
}

fn portfolio_issue(state: &GlobalState, a: &ActionProfile) -> Issue {
    let snap = Snapshot::capture(state, a);
    let zone_util = snap.scalar(reinsim_core::norms::Scalar::ZoneUtilization);
    if zone_util > 1.0 {
        let terms = &state.treaty_view.treaty.terms;
        let acc = &state.portfolio_view.zone_accumulation;
        let zone = terms
            .zones
            .iter()
            .copied()
            .max_by_key(|z| acc.get(z).copied().unwrap_or(Money::ZERO))
            .expect("validated terms cover a zone");
        Issue::ZoneAccumulation {
            zone,
            utilization: zone_util,
        }
    } else {
        Issue::TailVar {
            utilization: snap.scalar(reinsim_core::norms::Scalar::TailVarUtilization),
        }
    }
}

impl Policy for PortfolioAgent {
    fn role(&self) -> Role {
        Role::PortfolioSteering
    }

    fn step(
        &mut self,
        _: u32,
        shared: &Shared<'_>,
        _: Option<&MessageLog>,
        belief: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision {
        if let Some(t) = latest_interpretation(inbox) {
            self.terms = Some(t.clone());
        }
        let mut d = Decision::default();
        let (Some(terms), Some((pid, p))) = (&self.terms, latest_proposal(inbox)) else {
            return d;
        };
        let a = shared.tools.assess(terms);
        let Some(state) = belief.hypothetical(&a) else {
            return d;
        };
        let limit = a.terms.total_limit();
        let cand = |s: f64| ActionProfile {
            pricing: Some(PricingAction {
                rate_on_line: p.rate_on_line,
                share: s,
                accept: p.accept,
            }),
            capital: None,
            portfolio: Some(PortfolioAction {
                capacity_granted: capacity_for(s, limit),
            }),
            retro: None,
        };
        let here = cand(p.share);
        if own_violations(shared, Role::PortfolioSteering, &state, &here).is_empty() {
            let capacity_granted = capacity_for(p.share, limit);
            let fact = StateFact::CapacityAssessment {
                share: p.share,
                capacity_granted,
            };
            d.action.portfolio = Some(PortfolioAction { capacity_granted });
            d.messages.push(
                Draft::to(
                    shared.graph.neighbours(Role::PortfolioSteering),
                    Payload::State(fact),
                )
                .closing_open(),
            );
        } else {
            let s = max_passing_share(&shared.tools.shares, p.share - 1e-9, |s| {
                own_violations(shared, Role::PortfolioSteering, &state, &cand(s)).is_empty()
            });
            let body = CritiqueBody {
                issue: portfolio_issue(&state, &here),
                refers_to: Some(pid),
                max_share: Some(s),
                corrected_terms: None,
            };
            d.messages
                .push(Draft::to([Role::Pricing], Payload::Critique(body)).closing_open());
        }
        d
    }
}

/// Roles whose confirmation a proposal needs before it can stand.
pub fn confirming_roles(graph_roles: &BTreeSet<Role>) -> Vec<Role> {
    [Role::Capital, Role::PortfolioSteering]
        .into_iter()
        .filter(|r| graph_roles.contains(r))
        .collect()
}
