mod common;

use common::*;
use reinsim_core::genesis::noisy::NoiseModel;
use reinsim_core::message::{Issue, MessageKind, Payload, StateFact};
use reinsim_core::role::Role;
use reinsim_kernel::episode::{recertify, EscalationReason};
use reinsim_kernel::{run_episode, EpisodeOutcome, KernelConfig, Profile, World};

fn kinds(o: &EpisodeOutcome) -> Vec<(u32, Role, MessageKind)> {
    o.trajectory
        .messages
        .messages
        .iter()
        .map(|m| (m.round, m.sender, m.kind))
        .collect()
}

fn count(o: &EpisodeOutcome, k: MessageKind) -> usize {
    o.trajectory
        .messages
        .messages
        .iter()
        .filter(|m| m.kind == k)
        .count()
}

#[test]
fn unconstrained_treaty_settles_in_five_rounds() {
    let world = roomy_world(20);
    let cfg = KernelConfig::default();
    for i in 0..world.len() {
        let o = run_episode(&world, i, Profile::MultiAgent, &cfg, 1).unwrap();
        assert_eq!(o.rounds, Some(5), "treaty {i}");
        assert!(o.equilibrium && o.bound && !o.escalated);
        assert_eq!(count(&o, MessageKind::Critique), 0);
        assert_eq!(count(&o, MessageKind::Constraint), 0);
        assert_eq!(o.final_action.pricing.unwrap().share, 1.0);
        let cert = o.certificate.unwrap();
        assert!(cert.feasible && cert.consistent && cert.stable);
    }
}

#[test]
fn pipeline_order_when_unconstrained() {
    let world = roomy_world(3);
    let o = run_episode(&world, 0, Profile::MultiAgent, &KernelConfig::default(), 1).unwrap();
    let seq = kinds(&o);
    let at = |r: u32| -> Vec<(Role, MessageKind)> {
        seq.iter()
            .filter(|x| x.0 == r)
            .map(|x| (x.1, x.2))
            .collect()
    };
    assert_eq!(
        at(1),
        vec![
            (Role::TreatyInterpretation, MessageKind::State),
            (Role::ExposureUnderstanding, MessageKind::State)
        ]
    );
    assert_eq!(at(2), vec![(Role::HazardModeling, MessageKind::State)]);
    assert_eq!(at(3), vec![(Role::Pricing, MessageKind::Proposal)]);
    assert_eq!(
        at(4),
        vec![
            (Role::Capital, MessageKind::State),
            (Role::PortfolioSteering, MessageKind::State)
        ]
    );
    assert_eq!(at(5), vec![(Role::Governance, MessageKind::State)]);
}

/// A solvency threshold that half the line meets and the full line does not.
fn binding_threshold(world: &World, index: usize) -> f64 {
    let cfg = KernelConfig::default();
    let state = reinsim_kernel::episode::episode_state(world, index, &cfg).unwrap();
    let budget = state.capital_view.allocation_budget.as_f64();
    let (half, full) = (
        state.capital_view.charge.at(0.5),
        state.capital_view.charge.at(1.0),
    );
    assert!(full > half / 0.95, "charge must grow with share");
    0.98 * budget / half
}

#[test]
fn capital_breach_constrains_pricing_then_settles() {
    let world = small_world();
    let base = KernelConfig::default();
    let index = (0..world.len())
        .find(|i| {
            run_episode(&world, *i, Profile::MultiAgent, &base, 1)
                .unwrap()
                .rounds
                == Some(5)
        })
        .unwrap();
    let mut cfg = base.clone();
    cfg.regulatory.solvency_threshold = binding_threshold(&world, index);
    let o = run_episode(&world, index, Profile::MultiAgent, &cfg, 1).unwrap();
    let constraint = o
        .trajectory
        .messages
        .messages
        .iter()
        .find(|m| m.kind == MessageKind::Constraint)
        .expect("capital objects to the full line");
    assert_eq!(constraint.sender, Role::Capital);
    assert!(constraint.recipients.contains(&Role::Pricing));
    let Payload::Constraint(body) = &constraint.payload else {
        unreachable!()
    };
    assert_eq!(body.norm_id, "solvency");
    let cap = body.max_share.unwrap();
    assert!((0.5..1.0).contains(&cap), "{cap}");

    let seq = kinds(&o);
    let proposals: Vec<u32> = seq
        .iter()
        .filter(|x| x.2 == MessageKind::Proposal)
        .map(|x| x.0)
        .collect();
    assert_eq!(proposals, vec![3, 5]);
    assert_eq!(constraint.round, 4);
    assert_eq!(o.rounds, Some(7));
    assert!(o.equilibrium && o.bound);
    assert_eq!(o.final_action.pricing.unwrap().share, cap);
    assert!(o.trajectory.messages.unresolved().next().is_none());
}

#[test]
fn infeasible_everywhere_escalates() {
    let world = small_world();
    let mut cfg = KernelConfig::default();
    cfg.regulatory.solvency_threshold = 1e12;
    let o = run_episode(&world, 0, Profile::MultiAgent, &cfg, 1).unwrap();
    assert!(o.escalated && !o.bound && !o.equilibrium);
    assert_eq!(o.escalation, Some(EscalationReason::Infeasible));
    assert!(!o.certificate.unwrap().feasible);
    let c = o
        .trajectory
        .messages
        .messages
        .iter()
        .find(|m| m.kind == MessageKind::Constraint)
        .unwrap();
    let Payload::Constraint(body) = &c.payload else {
        unreachable!()
    };
    assert_eq!(body.max_share, Some(0.0));
}

#[test]
fn round_cap_escalates() {
    let world = roomy_world(3);
    let mut cfg = KernelConfig::default();
    cfg.regulatory.max_rounds = 3;
    let o = run_episode(&world, 0, Profile::MultiAgent, &cfg, 1).unwrap();
    assert!(o.escalated);
    assert_eq!(o.escalation, Some(EscalationReason::MaxRounds));
    assert_eq!(o.rounds, Some(3));
}

fn surge_misreading() -> (World, usize, KernelConfig) {
    let world = roomy_world(120);
    let index = elided_surge_index(&world.portfolio);
    let mut cfg = KernelConfig::default();
    let misread = NoiseModel {
        ambiguous_exclusion: 1.0,
        ..NoiseModel::EXACT
    };
    cfg.noise.multi = misread;
    cfg.noise.nogov = misread;
    (world, index, cfg)
}

#[test]
fn governance_corrects_a_surge_misreading() {
    let (world, index, cfg) = surge_misreading();
    let truth = world.portfolio.treaties[index].terms.clone();
    let o = run_episode(&world, index, Profile::MultiAgent, &cfg, 1).unwrap();
    let critiques: Vec<_> = o
        .trajectory
        .messages
        .messages
        .iter()
        .filter(|m| m.kind == MessageKind::Critique)
        .collect();
    assert_eq!(critiques.len(), 1);
    let c = critiques[0];
    assert_eq!(c.sender, Role::Governance);
    assert!(c.recipients.contains(&Role::TreatyInterpretation));
    let Payload::Critique(body) = &c.payload else {
        unreachable!()
    };
    assert!(matches!(body.issue, Issue::InterpretationMismatch { .. }));
    assert_eq!(body.corrected_terms.as_ref(), Some(&truth));
    let reread = o.trajectory.messages.messages.iter().any(|m| {
        m.id > c.id && matches!(&m.payload, Payload::State(StateFact::Interpretation { terms }) if *terms == truth)
    });
    assert!(reread);
    let next: Vec<_> = o
        .trajectory
        .messages
        .messages
        .iter()
        .filter(|m| m.round == c.round + 1)
        .collect();
    assert!(next.iter().any(|m| m.sender == Role::TreatyInterpretation));
    assert_eq!(o.operative_terms.as_ref(), Some(&truth));
    assert_eq!(o.interpretation_errors, 0);
    assert!(o.equilibrium);
}

#[test]
fn without_governance_the_misreading_stands() {
    let (world, index, cfg) = surge_misreading();
    let truth = world.portfolio.treaties[index].terms.clone();
    let o = run_episode(&world, index, Profile::NoGovernance, &cfg, 1).unwrap();
    assert_eq!(count(&o, MessageKind::Critique), 0);
    assert_ne!(o.operative_terms.as_ref(), Some(&truth));
    assert!(o.interpretation_errors >= 1);
    assert!(o.certificate.is_none());
}

#[test]
fn exact_readings_raise_no_flags() {
    let world = small_world();
    let cfg = KernelConfig::default();
    for i in 0..world.len() {
        let o = run_episode(&world, i, Profile::MultiAgent, &cfg, 5).unwrap();
        let flagged = o.trajectory.messages.messages.iter().any(|m| {
            m.sender == Role::Governance
                && matches!(&m.payload, Payload::Critique(b) if matches!(b.issue, Issue::InterpretationMismatch { .. } | Issue::ScrMismatch { .. }))
        });
        assert!(!flagged, "treaty {i}");
        assert_eq!(o.interpretation_errors, 0);
    }
}

#[test]
fn episodes_are_deterministic() {
    let world = small_world();
    let cfg = KernelConfig::default();
    for p in Profile::ALL {
        for i in [0, 7, 19] {
            let a = run_episode(&world, i, p, &cfg, 42).unwrap();
            let b = run_episode(&world, i, p, &cfg, 42).unwrap();
            assert_eq!(a.audit_head, b.audit_head);
            assert_eq!(a.trace_jsonl(), b.trace_jsonl());
            assert_eq!(a, b);
        }
    }
}

#[test]
fn persisted_traces_recertify() {
    let world = small_world();
    let cfg = KernelConfig::default();
    for i in 0..world.len() {
        let o = run_episode(&world, i, Profile::MultiAgent, &cfg, 3).unwrap();
        o.audit.verify().unwrap();
        let r = recertify(&world, &cfg, &o.trace_jsonl()).unwrap();
        assert!(r.matches(), "treaty {i}");
        assert_eq!(r.escalated, o.escalated);
        assert_eq!(o.equilibrium, !o.escalated && r.recomputed.holds());
    }
}

#[test]
fn altered_trace_is_rejected() {
    let world = small_world();
    let cfg = KernelConfig::default();
    let o = run_episode(&world, 2, Profile::MultiAgent, &cfg, 3).unwrap();
    let text = o.trace_jsonl();
    let i = text
        .find("\"share\":1.0")
        .expect("trace records the proposal");
    let tampered = format!(
        "{}\"share\":0.9{}",
        &text[..i],
        &text[i + "\"share\":1.0".len()..]
    );
    assert!(recertify(&world, &cfg, &tampered).is_err());
}

#[test]
fn messages_stay_on_the_graph() {
    let world = small_world();
    let cfg = KernelConfig::default();
    let roles = reinsim_core::role::activate_roles(reinsim_core::role::Workflow::Pricing);
    for p in [Profile::MultiAgent, Profile::NoGovernance] {
        for i in 0..10 {
            let o = run_episode(&world, i, p, &cfg, 9).unwrap();
            for m in &o.trajectory.messages.messages {
                assert!(roles.contains(&m.sender));
                assert!(!m.recipients.contains(&m.sender));
                assert!(m.recipients.iter().all(|r| roles.contains(r)));
                if p == Profile::NoGovernance {
                    assert_ne!(m.sender, Role::Governance);
                    assert!(!m.recipients.contains(&Role::Governance));
                }
            }
        }
    }
}

#[test]
fn baselines_exchange_no_messages() {
    let world = small_world();
    let cfg = KernelConfig::default();
    let rule = run_episode(&world, 0, Profile::RuleBased, &cfg, 1).unwrap();
    assert_eq!(rule.messages, 0);
    assert_eq!(rule.rounds, None);
    let single = run_episode(&world, 0, Profile::SingleAgent, &cfg, 1).unwrap();
    assert_eq!(single.messages, 0);
    assert!(single.rounds.unwrap() >= 2);
}

#[test]
fn invalid_config_is_rejected() {
    let world = small_world();
    let mut cfg = KernelConfig::default();
    cfg.epsilon = -1.0;
    assert!(run_episode(&world, 0, Profile::MultiAgent, &cfg, 1).is_err());
    let mut cfg = KernelConfig::default();
    cfg.regulatory.max_rounds = 0;
    assert!(run_episode(&world, 0, Profile::MultiAgent, &cfg, 1).is_err());
}
