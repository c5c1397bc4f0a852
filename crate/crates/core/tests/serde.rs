use std::fmt::Debug;

use proptest::prelude::*;
use reinsim_core::action::*;
use reinsim_core::capital::CapitalConfig;
use reinsim_core::folio::RetroStructure;
use reinsim_core::genesis::{generate_portfolio, GeneratorConfig};
use reinsim_core::message::*;
use reinsim_core::norms::FeasibilitySet;
use reinsim_core::perils::HazardConfig;
use reinsim_core::reward::{RewardVector, ScalarWeights};
use reinsim_core::role::Role;
use reinsim_core::treaty::ZoneId;
use reinsim_core::Money;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + Debug>(v: &T) {
    let text = serde_json::to_string(v).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, v);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn configs_round_trip() {
    round_trip(&GeneratorConfig::default());
    round_trip(&HazardConfig::default());
    round_trip(&CapitalConfig::default());
    round_trip(&ScalarWeights::default());
    round_trip(&FeasibilitySet::standard());
}

#[test]
fn portfolio_round_trips() {
    let p = generate_portfolio(&GeneratorConfig {
        n_treaties: 60,
        ..Default::default()
    })
    .unwrap();
    round_trip(&p);
}

#[test]
fn messages_round_trip() {
    let p = generate_portfolio(&GeneratorConfig {
        n_treaties: 1,
        ..Default::default()
    })
    .unwrap();
    let terms = p.treaties[0].terms.clone();
    let payloads = vec![
        Payload::State(StateFact::Interpretation {
            terms: terms.clone(),
        }),
        Payload::State(StateFact::Hazard {
            expected_loss: 1.0 / 3.0,
            sd: 0.1,
            attach_probability: 0.07,
        }),
        Payload::State(StateFact::CapitalAssessment {
            share: 0.35,
            marginal_scr: 12345.678,
            charge: 0.1 + 0.2,
            allocated: Money::millions(4),
        }),
        Payload::Proposal(ProposalBody {
            rate_on_line: 0.1,
            share: 1.0,
            accept: true,
            technical_rate: 0.0912,
            revision: 2,
        }),
        Payload::Critique(CritiqueBody {
            issue: Issue::ZoneAccumulation {
                zone: ZoneId(4),
                utilization: 1.25,
            },
            refers_to: Some(7),
            max_share: Some(0.4),
            corrected_terms: Some(terms),
        }),
        Payload::Constraint(ConstraintBody {
            norm_id: "solvency".into(),
            refers_to: None,
            max_share: Some(0.0),
            min_rate: None,
        }),
    ];
    let mut log = MessageLog::default();
    for (i, p) in payloads.into_iter().enumerate() {
        let m = TypedMessage::new(
            i as u64,
            Role::Capital,
            [Role::Pricing, Role::Governance],
            p,
            4,
            "wf-1",
        );
        round_trip(&m);
        log.record(m).unwrap();
    }
    round_trip(&log);
}

fn money() -> impl Strategy<Value = Money> {
    (0i64..1_000_000_000_000).prop_map(Money)
}

proptest! {
    #[test]
    fn action_profiles_round_trip(
        rate in 0.0f64..1.0,
        share in 0.0f64..=1.0,
        accept in any::<bool>(),
        cap in prop::option::of(money()),
        capacity in prop::option::of(money()),
        cession in 0.0f64..=1.0,
    ) {
        let a = ActionProfile {
            pricing: Some(PricingAction { rate_on_line: rate, share, accept }),
            capital: cap.map(|c| CapitalAction { allocated_capital: c }),
            portfolio: capacity.map(|c| PortfolioAction { capacity_granted: c }),
            retro: Some(RetroAction { structure: Some(RetroStructure::QuotaShare { cession }) }),
        };
        round_trip(&a);
    }

    #[test]
    fn reward_vectors_round_trip(x in prop::array::uniform4(-1e12f64..1e12)) {
        round_trip(&RewardVector { cap: x[0], port: x[1], cons: x[2], gov: x[3] });
    }
}
