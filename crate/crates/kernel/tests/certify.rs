mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use reinsim_core::action::*;
use reinsim_core::message::*;
use reinsim_core::norms::*;
use reinsim_core::reward::{scalarize, RewardVector, ScalarWeights};
use reinsim_core::role::Role;
use reinsim_core::state::RegulatoryState;
use reinsim_core::Money;
use reinsim_kernel::adapter::degenerate_adapter;
use reinsim_kernel::env::Environment;
use reinsim_kernel::equilibrium::*;
use reinsim_kernel::projection::*;

fn quote(rate: f64, share: f64) -> ActionProfile {
    ActionProfile {
        pricing: Some(PricingAction {
            rate_on_line: rate,
            share,
            accept: true,
        }),
        ..Default::default()
    }
}

/// Reward depends on the rate only; declines earn nothing.
struct RateTable(Vec<(f64, f64)>);

impl Environment for RateTable {
    fn snapshot(&self, a: &ActionProfile) -> Snapshot {
        let rate = a.pricing.map_or(0.0, |p| p.rate_on_line);
        Snapshot {
            scalars: [(Scalar::RateOnLine, rate)].into_iter().collect(),
            accepted: a.is_bind(),
            zones: BTreeSet::new(),
            perils: BTreeSet::new(),
        }
    }

    fn reward(&self, a: &ActionProfile) -> RewardVector {
        let cap = match a.pricing {
            Some(p) if p.accept => self
                .0
                .iter()
                .find(|(r, _)| *r == p.rate_on_line)
                .map_or(0.0, |x| x.1),
            _ => 0.0,
        };
        RewardVector {
            cap,
            ..Default::default()
        }
    }
}

fn rate_cap(max: f64) -> FeasibilitySet {
    FeasibilitySet::new(vec![NormSpec {
        id: "rate_cap".into(),
        kind: NormKind::Prohibition,
        scope: NormScope::Pointwise,
        predicate: Predicate::All(vec![
            Predicate::Accepted,
            Predicate::Compare {
                lhs: Scalar::RateOnLine,
                op: CmpOp::Gt,
                rhs: Operand::Value(max),
            },
        ]),
        source: NormSource::Internal,
    }])
    .unwrap()
}

fn settled(a: ActionProfile) -> Trajectory {
    let snap = RateTable(vec![]).snapshot(&a);
    Trajectory {
        steps: vec![Step {
            round: 1,
            action: a,
            snapshot: snap,
            feasibility: Feasibility {
                feasible: true,
                ..Default::default()
            },
        }],
        messages: MessageLog::default(),
    }
}

/// Largest feasible gain over every unilateral deviation in the grid.
fn best_gain(
    env: &dyn Environment,
    f: &FeasibilitySet,
    grid: &ActionGrid,
    a: &ActionProfile,
    w: &ScalarWeights,
) -> f64 {
    let base = scalarize(&env.reward(a), w);
    grid.deviations(a)
        .into_iter()
        .filter(|(_, d)| f.check_snapshot(&env.snapshot(d), &[]).unwrap().feasible)
        .map(|(_, d)| scalarize(&env.reward(&d), w) - base)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn three_point_grid_is_stable_when_the_better_rate_is_barred() {
    let env = RateTable(vec![(0.3, 1.0), (0.2, 0.8), (0.1, 0.5)]);
    let grid = ActionGrid {
        rates: vec![0.1, 0.2, 0.3],
        shares: vec![1.0],
        ..Default::default()
    };
    let w = ScalarWeights::default();
    let a = quote(0.2, 1.0);
    let f = rate_cap(0.25);
    let cert = certify_equilibrium(&env, &settled(a.clone()), &f, &grid, &w, 1e-9);
    assert!(cert.holds());
    assert!(best_gain(&env, &f, &grid, &a, &w) <= 1e-9);

    let open = FeasibilitySet::default();
    let cert = certify_equilibrium(&env, &settled(a.clone()), &open, &grid, &w, 1e-9);
    assert!(!cert.stable);
    let d = cert.deviation.unwrap();
    assert_eq!(d.role, "pricing");
    assert_eq!(d.action, quote(0.3, 1.0));
    assert!((d.gain - 0.2).abs() < 1e-12);
    assert!((best_gain(&env, &open, &grid, &a, &w) - 0.2).abs() < 1e-12);
}

#[test]
fn single_action_grid_is_stable() {
    let env = RateTable(vec![(0.2, 0.8)]);
    let grid = ActionGrid {
        rates: vec![0.2],
        shares: vec![1.0],
        ..Default::default()
    };
    let cert = certify_equilibrium(
        &env,
        &settled(quote(0.2, 1.0)),
        &FeasibilitySet::default(),
        &grid,
        &ScalarWeights::default(),
        0.0,
    );
    assert!(cert.holds());
}

#[test]
fn open_critique_breaks_consistency() {
    let env = RateTable(vec![(0.2, 0.8)]);
    let mut traj = settled(quote(0.2, 1.0));
    let body = CritiqueBody {
        issue: Issue::TailVar { utilization: 1.2 },
        refers_to: None,
        max_share: Some(0.5),
        corrected_terms: None,
    };
    traj.messages
        .record(TypedMessage::new(
            1,
            Role::PortfolioSteering,
            [Role::Pricing],
            Payload::Critique(body),
            4,
            "wf",
        ))
        .unwrap();
    let grid = ActionGrid::default();
    let cert = certify_equilibrium(
        &env,
        &traj,
        &FeasibilitySet::default(),
        &grid,
        &ScalarWeights::default(),
        0.0,
    );
    assert!(!cert.consistent && cert.feasible && cert.stable);

    let close = TypedMessage::new(
        2,
        Role::PortfolioSteering,
        [Role::Pricing],
        Payload::State(StateFact::Validation {
            passed: true,
            flags: vec![],
        }),
        5,
        "wf",
    )
    .resolving([1]);
    traj.messages.record(close).unwrap();
    assert!(
        certify_equilibrium(
            &env,
            &traj,
            &FeasibilitySet::default(),
            &grid,
            &ScalarWeights::default(),
            0.0
        )
        .consistent
    );
}

#[test]
fn infeasible_visit_is_reported() {
    let env = RateTable(vec![(0.3, 1.0)]);
    let mut traj = settled(quote(0.1, 1.0));
    traj.steps
        .insert(0, settled(quote(0.3, 1.0)).steps.remove(0));
    let cert = certify_equilibrium(
        &env,
        &traj,
        &rate_cap(0.25),
        &ActionGrid::default(),
        &ScalarWeights::default(),
        0.0,
    );
    assert!(!cert.feasible);
    assert_eq!(cert.infeasible_step, Some(0));
}

fn rate_grid() -> Vec<ActionProfile> {
    (1..=10)
        .map(|i| quote(f64::from(i * 5) / 100.0, 1.0))
        .collect()
}

fn rate_of(a: &ActionProfile) -> f64 {
    a.pricing.unwrap().rate_on_line
}

#[test]
fn rate_projection_finds_nearest_feasible() {
    let grid = rate_grid();
    let feasible = |a: &ActionProfile| rate_of(a) >= 0.20;
    let p = project_with(
        feasible,
        &quote(0.10, 1.0),
        &grid,
        &ProjectionWeights::default(),
    )
    .unwrap();
    assert_eq!(rate_of(&p), 0.20);
    let oracle = grid
        .iter()
        .filter(|a| feasible(a))
        .min_by(|a, b| {
            (rate_of(a) - 0.10)
                .abs()
                .total_cmp(&(rate_of(b) - 0.10).abs())
        })
        .unwrap();
    assert_eq!(&p, oracle);
    let fine = quote(0.35, 1.0);
    assert_eq!(
        project_with(feasible, &fine, &grid, &ProjectionWeights::default()).unwrap(),
        fine
    );
}

#[test]
fn projection_ties_go_to_the_earlier_point() {
    let grid = vec![
        quote(0.25, 0.25),
        quote(0.75, 0.25),
        quote(0.25, 0.75),
        quote(0.75, 0.75),
    ];
    let target = quote(0.5, 0.5);
    let feasible = |a: &ActionProfile| rate_of(a) != 0.5;
    let w = ProjectionWeights::default();
    assert_eq!(project_with(feasible, &target, &grid, &w).unwrap(), grid[0]);
    let mut rev = grid.clone();
    rev.reverse();
    assert_eq!(project_with(feasible, &target, &rev, &w).unwrap(), rev[0]);
}

#[test]
fn projection_errors() {
    let w = ProjectionWeights::default();
    assert_eq!(
        project_with(|_| false, &quote(0.1, 1.0), &[], &w),
        Err(ProjectionError::EmptyGrid)
    );
    assert_eq!(
        project_with(|_| false, &quote(0.1, 1.0), &rate_grid(), &w),
        Err(ProjectionError::Infeasible)
    );
}

proptest! {
    #[test]
    fn projection_lands_in_the_feasible_set(target in 0.0f64..0.6, floor in 0.0f64..0.5, share in 0.0f64..=1.0) {
        let grid = rate_grid();
        let feasible = |a: &ActionProfile| rate_of(a) >= floor;
        let p = project_with(feasible, &quote(target, share), &grid, &ProjectionWeights::default()).unwrap();
        prop_assert!(feasible(&p));
        if target >= floor {
            prop_assert_eq!(p, quote(target, share));
        } else {
            let best = grid.iter().filter(|a| feasible(a)).map(|a| (rate_of(a) - target).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(((rate_of(&p) - target).abs() - best).abs() < 1e-12);
        }
    }
}

fn full_line(s: &reinsim_core::state::GlobalState) -> ActionProfile {
    let limit = s.treaty_view.treaty.terms.total_limit();
    ActionProfile {
        pricing: Some(PricingAction {
            rate_on_line: 0.1,
            share: 1.0,
            accept: true,
        }),
        capital: Some(CapitalAction {
            allocated_capital: s.capital_view.allocation_budget,
        }),
        portfolio: Some(PortfolioAction {
            capacity_granted: limit,
        }),
        retro: None,
    }
}

#[test]
fn degenerate_pipeline_without_norms_is_an_equilibrium() {
    let world = small_world();
    let states: Vec<_> = (0..5)
        .map(|i| {
            world
                .episode_context(i, &RegulatoryState::default())
                .unwrap()
                .state
        })
        .collect();
    let run = degenerate_adapter(full_line).run(&states, &FeasibilitySet::default());
    assert!(run.certificate.holds());
    assert!(run.trajectory.messages.messages.is_empty());
    assert_eq!(run.trajectory.steps.len(), 5);
    let hold = degenerate_adapter(|_: &reinsim_core::state::GlobalState| ActionProfile::hold());
    assert!(hold
        .run(&states, &FeasibilitySet::default())
        .certificate
        .holds());
}

#[test]
fn degenerate_pipeline_cannot_respect_a_history_norm() {
    let world = small_world();
    let states: Vec<_> = (0..world.len())
        .map(|i| {
            world
                .episode_context(i, &RegulatoryState::default())
                .unwrap()
                .state
        })
        .filter(|s| s.capital_view.marginal_scr.at(1.0) > 0.0)
        .take(3)
        .collect();
    assert_eq!(states.len(), 3);
    let scr_bind = Predicate::All(vec![
        Predicate::Accepted,
        Predicate::Compare {
            lhs: Scalar::MarginalScr,
            op: CmpOp::Gt,
            rhs: Operand::Value(0.0),
        },
    ]);
    let f = FeasibilitySet::new(vec![NormSpec {
        id: "no_consecutive_scr_binds".into(),
        kind: NormKind::Obligation,
        scope: NormScope::HistoryDependent,
        predicate: Predicate::Consecutive {
            condition: Box::new(scr_bind),
            max_run: 1,
        },
        source: NormSource::Internal,
    }])
    .unwrap();
    let run = degenerate_adapter(full_line).run(&states, &f);
    assert!(!run.certificate.feasible);
    assert_eq!(run.certificate.infeasible_step, Some(1));
    assert!(run.certificate.consistent);
}

fn solvency_and_zone() -> FeasibilitySet {
    FeasibilitySet::new(vec![
        NormSpec {
            id: "solvency".into(),
            kind: NormKind::Obligation,
            scope: NormScope::Pointwise,
            predicate: Predicate::Compare {
                lhs: Scalar::SolvencyRatio,
                op: CmpOp::Ge,
                rhs: Operand::Value(1.0),
            },
            source: NormSource::Regulatory,
        },
        NormSpec {
            id: "zone_cap".into(),
            kind: NormKind::Obligation,
            scope: NormScope::Pointwise,
            predicate: Predicate::Compare {
                lhs: Scalar::ZoneUtilization,
                op: CmpOp::Le,
                rhs: Operand::Value(1.0),
            },
            source: NormSource::Internal,
        },
    ])
    .unwrap()
}

#[test]
fn real_state_grid_matches_direct_evaluation() {
    let world = small_world();
    let state = world
        .episode_context(3, &RegulatoryState::default())
        .unwrap()
        .state;
    let f = solvency_and_zone();
    let terms = &state.treaty_view.treaty.terms;
    let limit = terms.total_limit().major_f64();
    let appetite = state.portfolio_view.zone_appetite.major_f64();
    let budget = state.capital_view.allocation_budget;
    let mut seen = [0usize; 2];
    for i in 1..=10 {
        for j in 0..10 {
            let share = f64::from(i) / 10.0;
            let alloc = Money::from_f64(budget.as_f64() * f64::from(j) / 9.0);
            let a = ActionProfile {
                pricing: Some(PricingAction {
                    rate_on_line: 0.1,
                    share,
                    accept: true,
                }),
                capital: Some(CapitalAction {
                    allocated_capital: alloc,
                }),
                portfolio: None,
                retro: None,
            };
            let got = check_feasible(&f, &state, &a, &[]).unwrap();
            let charge = state.capital_view.charge.at(share) / 100.0;
            let solvent = alloc.major_f64() / charge >= 1.0;
            let worst_zone = terms
                .zones
                .iter()
                .map(|z| {
                    (state
                        .portfolio_view
                        .zone_accumulation
                        .get(z)
                        .map_or(0.0, |m| m.major_f64())
                        + share * limit)
                        / appetite
                })
                .fold(0.0, f64::max);
            let within = worst_zone <= 1.0;
            let mut expected = BTreeSet::new();
            if !solvent {
                expected.insert("solvency".to_string());
            }
            if !within {
                expected.insert("zone_cap".to_string());
            }
            assert_eq!(got.violated, expected, "share {share} alloc {alloc}");
            seen[usize::from(got.feasible)] += 1;
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn projected_replay_never_visits_an_infeasible_pair() {
    let world = small_world();
    let state = world
        .episode_context(5, &RegulatoryState::default())
        .unwrap()
        .state;
    let f = solvency_and_zone();
    let budget = state.capital_view.allocation_budget;
    let act = |share: f64, alloc: Money| ActionProfile {
        pricing: Some(PricingAction {
            rate_on_line: 0.1,
            share,
            accept: true,
        }),
        capital: Some(CapitalAction {
            allocated_capital: alloc,
        }),
        portfolio: None,
        retro: None,
    };
    let grid: Vec<_> = (0..=10)
        .flat_map(|i| (0..=4).map(move |j| (f64::from(i) / 10.0, j)))
        .map(|(share, j)| act(share, Money::from_f64(budget.as_f64() * f64::from(j) / 4.0)))
        .collect();
    let base = vec![act(1.0, Money(0)), act(0.6, Money(0)), act(0.3, budget)];
    let run = run_projected(&state, &f, &grid, &ProjectionWeights::default(), &base).unwrap();
    assert!(!run.base_feasible);
    assert_eq!(run.infeasible_visited, 0);
    assert_eq!(run.projected.len(), 3);
    for p in &run.projected {
        assert!(check_feasible(&f, &state, p, &[]).unwrap().feasible);
    }
}
