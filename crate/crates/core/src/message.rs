//! Typed messages and the communication graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::role::Role;
use crate::treaty::{TreatyTerms, ZoneId};

pub type MessageId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    State,
    Proposal,
    Critique,
    Constraint,
}

impl MessageKind {
    /// Critiques and constraints stay open until their issuer resolves them.
    pub fn needs_resolution(self) -> bool {
        matches!(self, MessageKind::Critique | MessageKind::Constraint)
    }
}

/// Facts broadcast with a State message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topic", rename_all = "snake_case")]
pub enum StateFact {
    Interpretation {
        terms: TreatyTerms,
    },
    Exposure {
        subject_tiv: Money,
        locations: usize,
    },
    Hazard {
        expected_loss: f64,
        sd: f64,
        attach_probability: f64,
    },
    /// Capital's numbers for a proposal it accepts.
    CapitalAssessment {
        share: f64,
        marginal_scr: f64,
        charge: f64,
        allocated: Money,
    },
    /// Portfolio's sign-off on a proposal.
    CapacityAssessment {
        share: f64,
        capacity_granted: Money,
    },
    Validation {
        passed: bool,
        flags: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalBody {
    pub rate_on_line: f64,
    pub share: f64,
    pub accept: bool,
    pub technical_rate: f64,
    pub revision: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Issue {
    InterpretationMismatch { fields: usize },
    ZoneAccumulation { zone: ZoneId, utilization: f64 },
    TailVar { utilization: f64 },
    ScrMismatch { reported: f64, recomputed: f64 },
    UnansweredViolation { norm_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueBody {
    pub issue: Issue,
    pub refers_to: Option<MessageId>,
    /// Largest share the critic would accept, when that is the remedy.
    pub max_share: Option<f64>,
    /// Replacement structure, when the remedy is a corrected reading.
    pub corrected_terms: Option<TreatyTerms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBody {
    pub norm_id: String,
    pub refers_to: Option<MessageId>,
    pub max_share: Option<f64>,
    pub min_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum Payload {
    State(StateFact),
    Proposal(ProposalBody),
    Critique(CritiqueBody),
    Constraint(ConstraintBody),
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::State(_) => MessageKind::State,
            Payload::Proposal(_) => MessageKind::Proposal,
            Payload::Critique(_) => MessageKind::Critique,
            Payload::Constraint(_) => MessageKind::Constraint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedMessage {
    pub id: MessageId,
    pub sender: Role,
    pub recipients: BTreeSet<Role>,
    pub kind: MessageKind,
    pub payload: Payload,
    pub round: u32,
    pub workflow_id: String,
    /// Earlier critiques or constraints of the sender that this message closes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resolves: Vec<MessageId>,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("message {id}: edge {sender} -> {recipient} is not in the communication graph")]
    OffGraph {
        id: MessageId,
        sender: Role,
        recipient: Role,
    },
    #[error("message {0}: kind does not match payload")]
    KindMismatch(MessageId),
    #[error("message {0}: no recipients")]
    NoRecipients(MessageId),
    #[error(
        "message {id}: {sender} may only resolve its own open critiques and constraints ({target})"
    )]
    Resolution {
        id: MessageId,
        sender: Role,
        target: MessageId,
    },
}

impl TypedMessage {
    pub fn new(
        id: MessageId,
        sender: Role,
        recipients: impl IntoIterator<Item = Role>,
        payload: Payload,
        round: u32,
        workflow_id: &str,
    ) -> Self {
        TypedMessage {
            id,
            sender,
            recipients: recipients.into_iter().collect(),
            kind: payload.kind(),
            payload,
            round,
            workflow_id: workflow_id.to_owned(),
            resolves: Vec::new(),
            resolved: false,
        }
    }

    pub fn resolving(mut self, ids: impl IntoIterator<Item = MessageId>) -> Self {
        self.resolves.extend(ids);
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.kind != self.payload.kind() {
            return Err(ProtocolError::KindMismatch(self.id));
        }
        if self.recipients.is_empty() {
            return Err(ProtocolError::NoRecipients(self.id));
        }
        Ok(())
    }
}

/// Directed edges between roles. Self-loops exist only if added explicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommGraph {
    pub edges: BTreeSet<(Role, Role)>,
}

impl CommGraph {
    /// Every ordered pair of distinct roles.
    pub fn complete(roles: &BTreeSet<Role>) -> Self {
        let edges = roles
            .iter()
            .flat_map(|a| roles.iter().filter(move |b| *b != a).map(move |b| (*a, *b)))
            .collect();
        CommGraph { edges }
    }

    pub fn allows(&self, from: Role, to: Role) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn check(&self, msg: &TypedMessage) -> Result<(), ProtocolError> {
        msg.validate()?;
        for r in &msg.recipients {
            if !self.allows(msg.sender, *r) {
                return Err(ProtocolError::OffGraph {
                    id: msg.id,
                    sender: msg.sender,
                    recipient: *r,
                });
            }
        }
        Ok(())
    }

    pub fn neighbours(&self, from: Role) -> BTreeSet<Role> {
        self.edges
            .iter()
            .filter(|(a, _)| *a == from)
            .map(|(_, b)| *b)
            .collect()
    }
}

/// An episode's delivered messages with their resolution status.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageLog {
    pub messages: Vec<TypedMessage>,
}

impl MessageLog {
    /// Records a delivered message and closes whatever it resolves.
    pub fn record(&mut self, msg: TypedMessage) -> Result<(), ProtocolError> {
        for target in &msg.resolves {
            let open = self.messages.iter_mut().find(|m| m.id == *target);
            match open {
                Some(m) if m.sender == msg.sender && m.kind.needs_resolution() => m.resolved = true,
                _ => {
                    return Err(ProtocolError::Resolution {
                        id: msg.id,
                        sender: msg.sender,
                        target: *target,
                    })
                }
            }
        }
        self.messages.push(msg);
        Ok(())
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &TypedMessage> {
        self.messages
            .iter()
            .filter(|m| m.kind.needs_resolution() && !m.resolved)
    }

    pub fn count_by_kind(&self) -> BTreeMap<MessageKind, usize> {
        let mut out = BTreeMap::new();
        for m in &self.messages {
            *out.entry(m.kind).or_insert(0) += 1;
        }
        out
    }
}
