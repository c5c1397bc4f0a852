//! Episode trace events, stored one per line in a hash-chained log.

use reinsim_core::action::ActionProfile;
use reinsim_core::audit::{AuditError, AuditLog};
use reinsim_core::message::{MessageId, MessageLog, TypedMessage};
use reinsim_core::norms::Feasibility;
use reinsim_core::role::Role;
use reinsim_core::treaty::TreatyId;
use serde::{Deserialize, Serialize};

use crate::episode::{EscalationReason, Profile};
use crate::equilibrium::Certificate;

pub const TRACE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    EpisodeStarted {
        schema: u32,
        treaty: TreatyId,
        index: usize,
        profile: Profile,
        seed: u64,
        workflow_id: String,
    },
    Message {
        message: TypedMessage,
    },
    Resolution {
        by: MessageId,
        resolved: Vec<MessageId>,
    },
    ConstraintApplied {
        round: u32,
        from: Role,
        message: MessageId,
        max_share: f64,
    },
    Decision {
        round: u32,
        action: ActionProfile,
        feasibility: Feasibility,
    },
    Escalation {
        round: u32,
        reason: EscalationReason,
    },
    EpisodeClosed {
        rounds: Option<u32>,
        escalated: bool,
        final_action: ActionProfile,
        certificate: Option<Certificate>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("trace line {line}: {message}")]
    Event { line: usize, message: String },
    #[error("trace schema {0} is not supported")]
    Schema(u32),
    #[error("trace is missing its {0} event")]
    Missing(&'static str),
}

/// Appends events with the round as logical timestamp.
#[derive(Debug, Default)]
pub struct TraceWriter {
    pub log: AuditLog,
}

impl TraceWriter {
    pub fn emit(&mut self, round: u32, e: &TraceEvent) -> Result<(), AuditError> {
        self.log.append(e, round).map(|_| ())
    }
}

/// A trace read back and checked against its chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub events: Vec<TraceEvent>,
}

impl ParsedTrace {
    pub fn from_jsonl(text: &str) -> Result<ParsedTrace, TraceError> {
        let log = AuditLog::from_jsonl(text)?;
        ParsedTrace::from_log(&log)
    }

    pub fn from_log(log: &AuditLog) -> Result<ParsedTrace, TraceError> {
        log.verify()?;
        let mut events = Vec::with_capacity(log.len());
        for (i, e) in log.entries().iter().enumerate() {
            let ev: TraceEvent =
                serde_json::from_value(e.payload.clone()).map_err(|err| TraceError::Event {
                    line: i + 1,
                    message: err.to_string(),
                })?;
            events.push(ev);
        }
        match events.first() {
            Some(TraceEvent::EpisodeStarted { schema, .. }) if *schema != TRACE_SCHEMA => {
                return Err(TraceError::Schema(*schema))
            }
            Some(TraceEvent::EpisodeStarted { .. }) => {}
            _ => return Err(TraceError::Missing("episode_started")),
        }
        Ok(ParsedTrace { events })
    }

    /// Index, profile and seed the episode was started with.
    pub fn header(&self) -> (usize, Profile, u64) {
        match &self.events[0] {
            TraceEvent::EpisodeStarted {
                index,
                profile,
                seed,
                ..
            } => (*index, *profile, *seed),
            _ => unreachable!("checked on parse"),
        }
    }

    /// Messages replayed through a fresh log, and the decided actions by
    /// round. Stored snapshots are not trusted; callers recompute them.
    pub fn replay(&self) -> Result<(MessageLog, Vec<(u32, ActionProfile)>), TraceError> {
        let mut messages = MessageLog::default();
        let mut actions = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            match e {
                TraceEvent::Message { message } => {
                    let mut m = message.clone();
                    m.resolved = false;
                    messages.record(m).map_err(|err| TraceError::Event {
                        line: i + 1,
                        message: err.to_string(),
                    })?;
                }
                TraceEvent::Decision { round, action, .. } => {
                    actions.push((*round, action.clone()))
                }
                _ => {}
            }
        }
        Ok((messages, actions))
    }

    pub fn closing(&self) -> Result<(bool, Option<&Certificate>), TraceError> {
        self.events
            .iter()
            .rev()
            .find_map(|e| match e {
                TraceEvent::EpisodeClosed {
                    escalated,
                    certificate,
                    ..
                } => Some((*escalated, certificate.as_ref())),
                _ => None,
            })
            .ok_or(TraceError::Missing("episode_closed"))
    }
}
