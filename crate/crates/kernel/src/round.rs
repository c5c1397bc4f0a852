//! One synchronous round: receive, update, invoke tools, issue.

use std::collections::{BTreeMap, BTreeSet};

use reinsim_core::action::ActionProfile;
use reinsim_core::message::{
    CommGraph, MessageId, MessageLog, Payload, ProtocolError, TypedMessage,
};
use reinsim_core::norms::FeasibilitySet;
use reinsim_core::role::Role;

use crate::env::PricingParams;
use crate::observe::{reads_log, BeliefState};
use crate::world::Tools;

/// A message before the runtime stamps it with an id and round.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub recipients: BTreeSet<Role>,
    pub payload: Payload,
    pub resolves: Vec<MessageId>,
    /// Also close every critique or constraint the sender still has open.
    pub close_open: bool,
}

impl Draft {
    pub fn to(recipients: impl IntoIterator<Item = Role>, payload: Payload) -> Self {
        Draft {
            recipients: recipients.into_iter().collect(),
            payload,
            resolves: Vec::new(),
            close_open: false,
        }
    }

    pub fn closing_open(mut self) -> Self {
        self.close_open = true;
        self
    }

    pub fn resolving(mut self, ids: impl IntoIterator<Item = MessageId>) -> Self {
        self.resolves.extend(ids);
        self
    }
}

/// What an agent does in a round: messages plus its own action entry, if
/// it has one to put forward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Decision {
    pub messages: Vec<Draft>,
    pub action: ActionProfile,
}

/// Read-only episode context shared by every agent.
pub struct Shared<'a> {
    pub workflow_id: &'a str,
    pub tools: &'a Tools,
    pub pricing: &'a PricingParams,
    pub norms: &'a FeasibilitySet,
    /// Which role answers for each norm.
    pub owners: &'a BTreeMap<String, Role>,
    pub graph: &'a CommGraph,
}

impl Shared<'_> {
    pub fn owner(&self, norm_id: &str) -> Role {
        self.owners
            .get(norm_id)
            .copied()
            .unwrap_or(Role::Governance)
    }

    pub fn owned_by(&self, role: Role) -> BTreeSet<String> {
        self.norms
            .norms
            .iter()
            .filter(|n| self.owner(&n.id) == role)
            .map(|n| n.id.clone())
            .collect()
    }
}

pub trait Policy: Send {
    fn role(&self) -> Role;

    /// `log` holds everything delivered before this round and is only
    /// passed to roles that read it.
    fn step(
        &mut self,
        round: u32,
        shared: &Shared<'_>,
        log: Option<&MessageLog>,
        belief: &BeliefState,
        inbox: &[TypedMessage],
    ) -> Decision;
}

pub struct Agent {
    pub policy: Box<dyn Policy>,
    pub belief: BeliefState,
}

impl Agent {
    pub fn role(&self) -> Role {
        self.policy.role()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundOutput {
    /// Issued this round, delivered next round.
    pub messages: Vec<TypedMessage>,
    /// Entries the agents put forward this round, merged.
    pub candidate: ActionProfile,
}

/// Runs every agent once in role order. Ids are assigned consecutively from
/// `next_id`. Any off-graph message aborts the round.
pub fn run_round(
    agents: &mut [Agent],
    inboxes: &BTreeMap<Role, Vec<TypedMessage>>,
    round: u32,
    shared: &Shared<'_>,
    log: &MessageLog,
    next_id: &mut MessageId,
) -> Result<RoundOutput, ProtocolError> {
    agents.sort_by_key(Agent::role);
    let mut out = RoundOutput::default();
    let empty = Vec::new();
    for agent in agents.iter_mut() {
        let role = agent.role();
        let inbox = inboxes.get(&role).unwrap_or(&empty);
        agent.belief.receive(round, inbox);
        let visible = reads_log(role).then_some(log);
        let decision = agent
            .policy
            .step(round, shared, visible, &agent.belief, inbox);
        for mut d in decision.messages {
            if d.close_open {
                let open = log.unresolved().filter(|m| m.sender == role).map(|m| m.id);
                let open: Vec<MessageId> = open.filter(|id| !d.resolves.contains(id)).collect();
                d.resolves.extend(open);
            }
            let msg = TypedMessage::new(
                *next_id,
                role,
                d.recipients,
                d.payload,
                round,
                shared.workflow_id,
            )
            .resolving(d.resolves);
            shared.graph.check(&msg)?;
            *next_id += 1;
            out.messages.push(msg);
        }
        merge(&mut out.candidate, decision.action);
    }
    Ok(out)
}

/// Later entries replace earlier ones, field by field.
pub fn merge(into: &mut ActionProfile, from: ActionProfile) {
    if from.pricing.is_some() {
        into.pricing = from.pricing;
    }
    if from.capital.is_some() {
        into.capital = from.capital;
    }
    if from.portfolio.is_some() {
        into.portfolio = from.portfolio;
    }
    if from.retro.is_some() {
        into.retro = from.retro;
    }
}

/// Routes issued messages to next round's inboxes.
pub fn deliver(messages: &[TypedMessage]) -> BTreeMap<Role, Vec<TypedMessage>> {
    let mut inboxes: BTreeMap<Role, Vec<TypedMessage>> = BTreeMap::new();
    for m in messages {
        for r in &m.recipients {
            inboxes.entry(*r).or_default().push(m.clone());
        }
    }
    inboxes
}
