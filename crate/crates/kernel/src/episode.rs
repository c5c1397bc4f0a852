//! Episodes under the four configurations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use reinsim_core::action::{ActionProfile, CapitalAction, PortfolioAction, PricingAction};
use reinsim_core::audit::{AuditError, AuditLog};
use reinsim_core::genesis::noisy::{parse_wording_noisy, NoiseModel};
use reinsim_core::message::{
    CommGraph, ConstraintBody, CritiqueBody, MessageLog, Payload, ProtocolError, StateFact,
    TypedMessage,
};
use reinsim_core::norms::{FeasibilitySet, Snapshot};
use reinsim_core::reward::ScalarWeights;
use reinsim_core::rng::stream;
use reinsim_core::role::{activate_roles, Role, Workflow};
use reinsim_core::state::{GlobalState, RegulatoryState};
use reinsim_core::treaty::{TreatyId, TreatyTerms};
use reinsim_core::Money;
use serde::{Deserialize, Serialize};

use crate::agents::{
    allocation_at, candidate_at, capacity_for, confirming_roles, max_passing_share, own_violations,
    CapitalAgent, ExposureReader, HazardModeler, Interpreter, Passive, PortfolioAgent, Pricer,
};
use crate::env::{EpisodeEnv, PricingParams};
use crate::equilibrium::{certify_equilibrium, ActionGrid, Certificate, Step, Trajectory};
use crate::governance::{ready_for_review, GovernanceAgent};
use crate::observe::{observe, observe_full};
use crate::round::{deliver, merge, run_round, Agent, Policy, Shared};
use crate::trace::{ParsedTrace, TraceError, TraceEvent, TraceWriter, TRACE_SCHEMA};
use crate::world::{EpisodeContext, World, WorldError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Profile {
    #[serde(rename = "rule")]
    RuleBased,
    #[serde(rename = "single")]
    SingleAgent,
    #[serde(rename = "multi")]
    MultiAgent,
    #[serde(rename = "nogov")]
    NoGovernance,
}

impl Profile {
    pub const ALL: [Profile; 4] = [
        Profile::RuleBased,
        Profile::SingleAgent,
        Profile::MultiAgent,
        Profile::NoGovernance,
    ];

    /// Row label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Profile::RuleBased => "Rule-Based",
            Profile::SingleAgent => "Single-Agent",
            Profile::MultiAgent => "Multi-Agent",
            Profile::NoGovernance => "No-Governance",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Profile::RuleBased => "rule",
            Profile::SingleAgent => "single",
            Profile::MultiAgent => "multi",
            Profile::NoGovernance => "nogov",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Profile::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| format!("unknown profile `{s}`"))
    }
}

/// Reading noise per configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseProfiles {
    pub rule: NoiseModel,
    pub single: NoiseModel,
    pub multi: NoiseModel,
    pub nogov: NoiseModel,
}

impl Default for NoiseProfiles {
    fn default() -> Self {
        NoiseProfiles {
            rule: NoiseModel {
                amount: 0.02,
                exclusion: 0.05,
                ambiguous_exclusion: 1.0,
                hours: 0.05,
            },
            single: NoiseModel {
                amount: 0.02,
                exclusion: 0.05,
                ambiguous_exclusion: 0.4,
                hours: 0.05,
            },
            multi: NoiseModel::EXACT,
            nogov: NoiseModel {
                amount: 0.015,
                exclusion: 0.04,
                ambiguous_exclusion: 0.3,
                hours: 0.04,
            },
        }
    }
}

impl NoiseProfiles {
    pub fn get(&self, p: Profile) -> NoiseModel {
        match p {
            Profile::RuleBased => self.rule,
            Profile::SingleAgent => self.single,
            Profile::MultiAgent => self.multi,
            Profile::NoGovernance => self.nogov,
        }
    }
}

pub fn default_norm_owners() -> BTreeMap<String, Role> {
    [
        ("solvency", Role::Capital),
        ("capital_allocation", Role::Capital),
        ("capacity", Role::PortfolioSteering),
        ("zone_accumulation", Role::PortfolioSteering),
        ("tail_var", Role::PortfolioSteering),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub regulatory: RegulatoryState,
    pub pricing: PricingParams,
    pub weights: ScalarWeights,
    /// Gain a deviation needs before it counts against stability.
    pub epsilon: f64,
    pub norms: FeasibilitySet,
    /// Norms without an owner fall to governance.
    pub norm_owners: BTreeMap<String, Role>,
    pub noise: NoiseProfiles,
    /// Profiles whose episodes get an equilibrium certificate.
    pub certify: BTreeSet<Profile>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            regulatory: RegulatoryState::default(),
            pricing: PricingParams::default(),
            weights: ScalarWeights::default(),
            epsilon: 1e-9,
            norms: FeasibilitySet::standard(),
            norm_owners: default_norm_owners(),
            noise: NoiseProfiles::default(),
            certify: [Profile::MultiAgent].into_iter().collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("kernel configuration: {0}")]
    Config(String),
}

impl KernelConfig {
    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |e: String| KernelError::Config(e);
        self.regulatory.validate().map_err(|e| bad(e.to_string()))?;
        self.pricing.validate().map_err(bad)?;
        self.weights.validate().map_err(|e| bad(e.to_string()))?;
        self.norms.validate().map_err(|e| bad(e.to_string()))?;
        for p in Profile::ALL {
            self.noise
                .get(p)
                .validate()
                .map_err(|e| bad(e.to_string()))?;
        }
        if !(self.epsilon >= 0.0) {
            return Err(bad(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationReason {
    /// The round cap was reached without settling.
    MaxRounds,
    /// An agent showed that no positive share meets its norms.
    Infeasible,
    /// Two readings of the wording disagreed.
    ReadingConflict,
    /// The bound action breaks a norm under the true terms.
    ExPostViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub treaty: TreatyId,
    pub index: usize,
    pub profile: Profile,
    pub seed: u64,
    /// Message rounds, or internal stages for the single agent; none for
    /// the fixed pipeline.
    pub rounds: Option<u32>,
    pub escalated: bool,
    pub escalation: Option<EscalationReason>,
    /// Accepted and not escalated.
    pub bound: bool,
    /// The settled action, or the pending one handed to review.
    pub final_action: ActionProfile,
    pub recommended_rate: Option<f64>,
    pub operative_terms: Option<TreatyTerms>,
    pub interpretation_errors: usize,
    pub interpretation_fields: usize,
    /// Final action against the true terms.
    pub violated: BTreeSet<String>,
    /// Minor units, true terms: premium, expected loss on the line and the
    /// marginal SCR of the line.
    pub premium: f64,
    pub expected_loss: f64,
    pub marginal_scr: f64,
    pub expense_loading: f64,
    pub messages: usize,
    pub trajectory: Trajectory,
    pub certificate: Option<Certificate>,
    /// Equilibrium reported: not escalated and all three checks pass.
    pub equilibrium: bool,
    pub audit_head: String,
    #[serde(skip)]
    pub audit: AuditLog,
}

impl EpisodeOutcome {
    pub fn interpretation_error(&self) -> f64 {
        if self.interpretation_fields == 0 {
            0.0
        } else {
            self.interpretation_errors as f64 / self.interpretation_fields as f64
        }
    }

    pub fn trace_jsonl(&self) -> String {
        self.audit.to_jsonl()
    }
}

fn workflow_id(ctx: &EpisodeContext) -> String {
    format!("pricing/{}", ctx.state.treaty_view.treaty.terms.id)
}

struct Recorder<'a> {
    ctx: &'a EpisodeContext,
    norms: &'a FeasibilitySet,
    writer: TraceWriter,
    steps: Vec<Step>,
    history: Vec<Snapshot>,
}

impl<'a> Recorder<'a> {
    fn new(ctx: &'a EpisodeContext, norms: &'a FeasibilitySet) -> Self {
        Recorder {
            ctx,
            norms,
            writer: TraceWriter::default(),
            steps: Vec::new(),
            history: Vec::new(),
        }
    }

    fn emit(&mut self, round: u32, e: TraceEvent) -> Result<(), AuditError> {
        self.writer.emit(round, &e)
    }

    fn decide(&mut self, round: u32, action: ActionProfile) -> Result<(), AuditError> {
        let snapshot = Snapshot::capture(&self.ctx.state, &action);
        let feasibility = self
            .norms
            .check_snapshot(&snapshot, &self.history)
            .unwrap_or_default();
        self.emit(
            round,
            TraceEvent::Decision {
                round,
                action: action.clone(),
                feasibility: feasibility.clone(),
            },
        )?;
        self.history.push(snapshot.clone());
        self.steps.push(Step {
            round,
            action,
            snapshot,
            feasibility,
        });
        Ok(())
    }

    fn message(&mut self, m: &TypedMessage) -> Result<(), AuditError> {
        self.emit(m.round, TraceEvent::Message { message: m.clone() })?;
        if !m.resolves.is_empty() {
            self.emit(
                m.round,
                TraceEvent::Resolution {
                    by: m.id,
                    resolved: m.resolves.clone(),
                },
            )?;
        }
        let limit = match &m.payload {
            Payload::Constraint(ConstraintBody { max_share, .. })
            | Payload::Critique(CritiqueBody { max_share, .. }) => *max_share,
            _ => None,
        };
        if let Some(x) = limit {
            self.emit(
                m.round,
                TraceEvent::ConstraintApplied {
                    round: m.round,
                    from: m.sender,
                    message: m.id,
                    max_share: x,
                },
            )?;
        }
        Ok(())
    }
}

/// What a profile's run produced, before common bookkeeping.
struct Run {
    rounds: Option<u32>,
    last_round: u32,
    escalation: Option<EscalationReason>,
    operative_terms: Option<TreatyTerms>,
    messages: MessageLog,
}

pub fn run_episode(
    world: &World,
    index: usize,
    profile: Profile,
    cfg: &KernelConfig,
    seed: u64,
) -> Result<EpisodeOutcome, KernelError> {
    cfg.validate()?;
    let ctx = world.episode_context(index, &cfg.regulatory)?;
    run_in_context(&ctx, profile, cfg, seed)
}

pub fn run_in_context(
    ctx: &EpisodeContext,
    profile: Profile,
    cfg: &KernelConfig,
    seed: u64,
) -> Result<EpisodeOutcome, KernelError> {
    let truth = &ctx.state.treaty_view.treaty.terms;
    let wf = workflow_id(ctx);
    let mut rec = Recorder::new(ctx, &cfg.norms);
    rec.emit(
        0,
        TraceEvent::EpisodeStarted {
            schema: TRACE_SCHEMA,
            treaty: truth.id.clone(),
            index: ctx.tools.index,
            profile,
            seed,
            workflow_id: wf.clone(),
        },
    )?;
    let mut run = match profile {
        Profile::MultiAgent | Profile::NoGovernance => {
            negotiate(ctx, profile, cfg, seed, &wf, &mut rec)?
        }
        Profile::SingleAgent => single_agent(ctx, cfg, seed, &wf, &mut rec)?,
        Profile::RuleBased => rule_based(ctx, cfg, seed, &mut rec)?,
    };
    let final_action = rec
        .steps
        .last()
        .map(|s| s.action.clone())
        .unwrap_or_default();
    let violated = rec
        .steps
        .last()
        .map(|s| s.feasibility.violated.clone())
        .unwrap_or_default();
    let settled = run.escalation.is_none();
    if settled && final_action.is_bind() && !violated.is_empty() {
        run.escalation = Some(EscalationReason::ExPostViolation);
    }
    if let Some(reason) = run.escalation {
        rec.emit(
            run.last_round,
            TraceEvent::Escalation {
                round: run.last_round,
                reason,
            },
        )?;
    }
    let escalated = run.escalation.is_some();
    let bound = final_action.is_bind() && !escalated;

    let env = EpisodeEnv::new(&ctx.state, &cfg.pricing, &cfg.norms);
    let trajectory = Trajectory {
        steps: std::mem::take(&mut rec.steps),
        messages: run.messages,
    };
    let certificate = cfg.certify.contains(&profile).then(|| {
        let grid = action_grid(ctx, cfg, &final_action);
        certify_equilibrium(
            &env,
            &trajectory,
            &cfg.norms,
            &grid,
            &cfg.weights,
            cfg.epsilon,
        )
    });
    let equilibrium = !escalated && certificate.as_ref().is_some_and(Certificate::holds);
    rec.emit(
        run.last_round,
        TraceEvent::EpisodeClosed {
            rounds: run.rounds,
            escalated,
            final_action: final_action.clone(),
            certificate: certificate.clone(),
        },
    )?;

    let fields = truth.interpretation_field_count();
    let errors = run
        .operative_terms
        .as_ref()
        .map_or(fields, |t| t.interpretation_errors_against(truth));
    let share = final_action.bound_share();
    let (premium, expected_loss, marginal_scr) = if bound {
        let rate = final_action.pricing.map_or(0.0, |p| p.rate_on_line);
        let el = ctx.tools.truth().expected_loss;
        (
            rate * share * truth.total_limit().as_f64(),
            el * share,
            ctx.state.capital_view.marginal_scr.at(share),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let audit = std::mem::take(&mut rec.writer.log);
    Ok(EpisodeOutcome {
        treaty: truth.id.clone(),
        index: ctx.tools.index,
        profile,
        seed,
        rounds: run.rounds,
        escalated,
        escalation: run.escalation,
        bound,
        recommended_rate: final_action.pricing.map(|p| p.rate_on_line),
        final_action,
        operative_terms: run.operative_terms,
        interpretation_errors: errors.min(fields),
        interpretation_fields: fields,
        violated,
        premium,
        expected_loss,
        marginal_scr,
        expense_loading: cfg.pricing.expense_loading,
        messages: trajectory.messages.messages.len(),
        trajectory,
        certificate,
        equilibrium,
        audit_head: audit.head_hex(),
        audit,
    })
}

fn build_agents(
    ctx: &EpisodeContext,
    roles: &BTreeSet<Role>,
    noise: NoiseModel,
    seed: u64,
) -> Vec<Agent> {
    roles
        .iter()
        .map(|&r| {
            let policy: Box<dyn Policy> = match r {
                Role::TreatyInterpretation => Box::new(Interpreter::new(
                    noise,
                    stream(seed, "kernel.interpretation", ctx.tools.index as u64),
                )),
                Role::ExposureUnderstanding => Box::<ExposureReader>::default(),
                Role::HazardModeling => Box::new(HazardModeler),
                Role::Pricing => Box::<Pricer>::default(),
                Role::Capital => Box::<CapitalAgent>::default(),
                Role::PortfolioSteering => Box::<PortfolioAgent>::default(),
                Role::Governance => Box::<GovernanceAgent>::default(),
                other => Box::new(Passive(other)),
            };
            Agent {
                policy,
                belief: observe(&ctx.state, r),
            }
        })
        .collect()
}

fn latest_reading(log: &MessageLog) -> Option<TreatyTerms> {
    log.messages.iter().rev().find_map(|m| match &m.payload {
        Payload::State(StateFact::Interpretation { terms }) => Some(terms.clone()),
        _ => None,
    })
}

fn proves_infeasible(m: &TypedMessage) -> bool {
    matches!(
        &m.payload,
        Payload::Constraint(ConstraintBody { max_share: Some(x), .. })
            | Payload::Critique(CritiqueBody { max_share: Some(x), .. }) if *x <= 0.0
    )
}

fn negotiate(
    ctx: &EpisodeContext,
    profile: Profile,
    cfg: &KernelConfig,
    seed: u64,
    wf: &str,
    rec: &mut Recorder<'_>,
) -> Result<Run, KernelError> {
    let governed = profile == Profile::MultiAgent;
    let mut roles = activate_roles(Workflow::Pricing);
    if !governed {
        roles.retain(|r| !r.is_governance());
    }
    let graph = CommGraph::complete(&roles);
    let confirmers = confirming_roles(&roles);
    let shared = Shared {
        workflow_id: wf,
        tools: &ctx.tools,
        pricing: &cfg.pricing,
        norms: &cfg.norms,
        owners: &cfg.norm_owners,
        graph: &graph,
    };
    let mut agents = build_agents(ctx, &roles, cfg.noise.get(profile), seed);
    let mut log = MessageLog::default();
    let mut inboxes = BTreeMap::new();
    let mut next_id = 1;
    let mut candidate = ActionProfile::hold();
    let max_rounds = cfg.regulatory.max_rounds;
    let mut escalation = None;
    let mut last_round = 0;
    for round in 1..=max_rounds {
        last_round = round;
        let out = run_round(&mut agents, &inboxes, round, &shared, &log, &mut next_id)?;
        let reviewed = if governed {
            ready_for_review(&log, &confirmers, Some(Role::Governance)).map(|r| r.action())
        } else {
            None
        };
        for m in &out.messages {
            rec.message(m)?;
            log.record(m.clone())?;
        }
        merge(&mut candidate, out.candidate);
        let settled = if governed {
            let passed = out.messages.iter().any(|m| {
                matches!(
                    m.payload,
                    Payload::State(StateFact::Validation { passed: true, .. })
                )
            });
            if passed {
                reviewed
            } else {
                None
            }
        } else {
            ready_for_review(&log, &confirmers, None).map(|r| r.action())
        };
        if let Some(a) = settled {
            rec.decide(round, a)?;
            break;
        }
        if out.messages.iter().any(proves_infeasible) {
            rec.decide(round, candidate.clone())?;
            escalation = Some(EscalationReason::Infeasible);
            break;
        }
        if round == max_rounds {
            rec.decide(round, candidate.clone())?;
            escalation = Some(EscalationReason::MaxRounds);
            break;
        }
        rec.decide(round, ActionProfile::hold())?;
        inboxes = deliver(&out.messages);
    }
    Ok(Run {
        rounds: Some(last_round),
        last_round,
        escalation,
        operative_terms: latest_reading(&log),
        messages: log,
    })
}

/// One policy running every stage in sequence. Reads the wording twice and
/// escalates if the readings differ; ignores portfolio appetite.
fn single_agent(
    ctx: &EpisodeContext,
    cfg: &KernelConfig,
    seed: u64,
    wf: &str,
    rec: &mut Recorder<'_>,
) -> Result<Run, KernelError> {
    let graph = CommGraph::default();
    let shared = Shared {
        workflow_id: wf,
        tools: &ctx.tools,
        pricing: &cfg.pricing,
        norms: &cfg.norms,
        owners: &cfg.norm_owners,
        graph: &graph,
    };
    let wording = &ctx.state.treaty_view.treaty.wording;
    let noise = cfg.noise.single;
    let mut rng = stream(seed, "kernel.single", ctx.tools.index as u64);
    let first = parse_wording_noisy(wording, &noise, &mut rng).ok();
    let second = parse_wording_noisy(wording, &noise, &mut rng).ok();
    let mut stage = 0u32;
    let hold_stage = |rec: &mut Recorder<'_>, stage: &mut u32| -> Result<(), AuditError> {
        *stage += 1;
        rec.decide(*stage, ActionProfile::hold())
    };
    let mut escalation = (first != second).then_some(EscalationReason::ReadingConflict);
    let Some(terms) = first else {
        hold_stage(rec, &mut stage)?;
        hold_stage(rec, &mut stage)?;
        return Ok(Run {
            rounds: Some(stage),
            last_round: stage,
            escalation: Some(EscalationReason::ReadingConflict),
            operative_terms: None,
            messages: MessageLog::default(),
        });
    };
    // Two readings, exposure, hazard, price.
    for _ in 0..5 {
        hold_stage(rec, &mut stage)?;
    }
    let a = ctx.tools.assess(&terms);
    let belief = observe_full(&ctx.state);
    let state = belief.hypothetical(&a).expect("full view includes hazard");
    let quote = |s: f64| Pricer::quote(&shared, &a, s);
    let bind_at = |s: f64| candidate_at(&shared, &state, quote(s), s, true);
    let capital_ok =
        |s: f64| own_violations(&shared, Role::Capital, &state, &bind_at(s)).is_empty();
    let mut action = bind_at(1.0);
    stage += 1;
    if !capital_ok(1.0) {
        let s = max_passing_share(&ctx.tools.shares, 1.0 - 1e-9, capital_ok);
        if s <= 0.0 {
            escalation = Some(EscalationReason::Infeasible);
        } else {
            // Reprice and check again.
            rec.decide(stage, ActionProfile::hold())?;
            stage += 2;
            action = bind_at(s);
        }
    }
    rec.decide(stage, action)?;
    Ok(Run {
        rounds: Some(stage),
        last_round: stage,
        escalation,
        operative_terms: Some(terms),
        messages: MessageLog::default(),
    })
}

/// Fixed-loading pipeline: one reading, full share, the whole budget.
fn rule_based(
    ctx: &EpisodeContext,
    cfg: &KernelConfig,
    seed: u64,
    rec: &mut Recorder<'_>,
) -> Result<Run, KernelError> {
    let wording = &ctx.state.treaty_view.treaty.wording;
    let mut rng = stream(seed, "kernel.rule", ctx.tools.index as u64);
    let reading = parse_wording_noisy(wording, &cfg.noise.rule, &mut rng).ok();
    let action = match &reading {
        Some(terms) => {
            let a = ctx.tools.assess(terms);
            let limit = terms.total_limit();
            ActionProfile {
                pricing: Some(PricingAction {
                    rate_on_line: cfg.pricing.rule_rate(a.expected_loss, limit),
                    share: 1.0,
                    accept: true,
                }),
                capital: Some(CapitalAction {
                    allocated_capital: ctx.state.capital_view.allocation_budget,
                }),
                portfolio: Some(PortfolioAction {
                    capacity_granted: capacity_for(1.0, limit),
                }),
                retro: None,
            }
        }
        None => ActionProfile::hold(),
    };
    rec.decide(1, action)?;
    Ok(Run {
        rounds: None,
        last_round: 1,
        escalation: None,
        operative_terms: reading,
        messages: MessageLog::default(),
    })
}

/// Deviation grid for the certificate: the uniform quote grid plus the
/// technical rate at every share, and each role's responses per share.
pub fn action_grid(ctx: &EpisodeContext, cfg: &KernelConfig, chosen: &ActionProfile) -> ActionGrid {
    let env = EpisodeEnv::new(&ctx.state, &cfg.pricing, &cfg.norms);
    let shares: Vec<f64> = ctx
        .tools
        .shares
        .iter()
        .copied()
        .filter(|s| *s > 0.0)
        .collect();
    let mut rates = cfg.pricing.rate_grid();
    rates.extend(shares.iter().map(|s| env.technical_rate(*s)));
    rates.extend(chosen.pricing.map(|p| p.rate_on_line));
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let graph = CommGraph::default();
    let shared = Shared {
        workflow_id: "",
        tools: &ctx.tools,
        pricing: &cfg.pricing,
        norms: &cfg.norms,
        owners: &cfg.norm_owners,
        graph: &graph,
    };
    let budget = ctx.state.capital_view.allocation_budget;
    let mut capital: Vec<Money> = vec![Money::ZERO, budget];
    capital.extend(
        shares
            .iter()
            .map(|s| allocation_at(&shared, &ctx.state, *s)),
    );
    capital.extend(chosen.capital.map(|c| c.allocated_capital));
    capital.sort();
    capital.dedup();
    let limit = ctx.state.treaty_view.treaty.terms.total_limit();
    let mut capacity: Vec<Money> = vec![Money::ZERO];
    capacity.extend(shares.iter().map(|s| capacity_for(*s, limit)));
    capacity.extend(chosen.portfolio.map(|p| p.capacity_granted));
    capacity.sort();
    capacity.dedup();
    ActionGrid {
        rates,
        shares,
        capital,
        capacity,
    }
}

/// Outcome of re-certifying a persisted trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Recertification {
    pub stored: Option<Certificate>,
    pub recomputed: Certificate,
    pub escalated: bool,
}

impl Recertification {
    pub fn matches(&self) -> bool {
        self.stored.as_ref() == Some(&self.recomputed)
    }
}

/// Verifies the chain, replays messages and decisions, and certifies again
/// against the episode rebuilt from `world` and `cfg`.
pub fn recertify(
    world: &World,
    cfg: &KernelConfig,
    jsonl: &str,
) -> Result<Recertification, KernelError> {
    let trace = ParsedTrace::from_jsonl(jsonl)?;
    let (index, _, _) = trace.header();
    let ctx = world.episode_context(index, &cfg.regulatory)?;
    let (messages, actions) = trace.replay()?;
    let steps = actions
        .into_iter()
        .map(|(round, action)| {
            let snapshot = Snapshot::capture(&ctx.state, &action);
            Step {
                round,
                action,
                snapshot,
                feasibility: Default::default(),
            }
        })
        .collect();
    let traj = Trajectory { steps, messages };
    let env = EpisodeEnv::new(&ctx.state, &cfg.pricing, &cfg.norms);
    let grid = action_grid(&ctx, cfg, &traj.final_action());
    let recomputed = certify_equilibrium(&env, &traj, &cfg.norms, &grid, &cfg.weights, cfg.epsilon);
    let (escalated, stored) = trace.closing()?;
    Ok(Recertification {
        stored: stored.cloned(),
        recomputed,
        escalated,
    })
}

/// The state the episode runs against, for callers that want to inspect it.
pub fn episode_state(
    world: &World,
    index: usize,
    cfg: &KernelConfig,
) -> Result<GlobalState, KernelError> {
    Ok(world.episode_context(index, &cfg.regulatory)?.state)
}
