//! Trajectories and the three-part equilibrium certificate.

use reinsim_core::action::{ActionProfile, CapitalAction, PortfolioAction, PricingAction};
use reinsim_core::message::{MessageKind, MessageLog, Payload, StateFact};
use reinsim_core::norms::{Feasibility, FeasibilitySet, Snapshot};
use reinsim_core::reward::{scalarize, ScalarWeights};
use reinsim_core::Money;
use serde::{Deserialize, Serialize};

use crate::env::Environment;

/// One realised joint action and what the norms saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub round: u32,
    pub action: ActionProfile,
    pub snapshot: Snapshot,
    pub feasibility: Feasibility,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub messages: MessageLog,
}

impl Trajectory {
    pub fn final_action(&self) -> ActionProfile {
        self.steps
            .last()
            .map(|s| s.action.clone())
            .unwrap_or_default()
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionProfile> {
        self.steps.iter().map(|s| &s.action)
    }
}

/// Values each action component may take in a deviation scan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    pub rates: Vec<f64>,
    pub shares: Vec<f64>,
    pub capital: Vec<Money>,
    pub capacity: Vec<Money>,
}

impl ActionGrid {
    /// Deviations of one role's entry, in canonical order: pricing first
    /// (decline, then rate-major binds), then capital, then capacity.
    pub fn deviations(&self, a: &ActionProfile) -> Vec<(&'static str, ActionProfile)> {
        let mut out = Vec::new();
        if let Some(p) = a.pricing {
            let mut decline = a.clone();
            decline.pricing = Some(PricingAction { accept: false, ..p });
            out.push(("pricing", decline));
            for &r in &self.rates {
                for &s in &self.shares {
                    let mut d = a.clone();
                    d.pricing = Some(PricingAction {
                        rate_on_line: r,
                        share: s,
                        accept: true,
                    });
                    out.push(("pricing", d));
                }
            }
        }
        if a.capital.is_some() {
            for &c in &self.capital {
                let mut d = a.clone();
                d.capital = Some(CapitalAction {
                    allocated_capital: c,
                });
                out.push(("capital", d));
            }
        }
        if a.portfolio.is_some() {
            for &c in &self.capacity {
                let mut d = a.clone();
                d.portfolio = Some(PortfolioAction {
                    capacity_granted: c,
                });
                out.push(("portfolio", d));
            }
        }
        out
    }
}

/// A profitable feasible deviation found by the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub role: String,
    pub action: ActionProfile,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub feasible: bool,
    pub consistent: bool,
    pub stable: bool,
    /// First visited step that failed, if any.
    pub infeasible_step: Option<usize>,
    pub deviation: Option<Deviation>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.feasible && self.consistent && self.stable
    }
}

/// No open critiques or constraints, and the surviving proposal and
/// confirmations agree with the final action on every decision variable.
pub fn consistent(log: &MessageLog, last: &ActionProfile) -> bool {
    if log.unresolved().next().is_some() {
        return false;
    }
    let Some(proposal) = log
        .messages
        .iter()
        .rev()
        .find(|m| m.kind == MessageKind::Proposal)
    else {
        return true;
    };
    let Payload::Proposal(p) = &proposal.payload else {
        return false;
    };
    let Some(chosen) = last.pricing else {
        return !last.is_bind();
    };
    if !chosen.accept {
        return true;
    }
    if chosen.rate_on_line != p.rate_on_line || chosen.share != p.share {
        return false;
    }
    let after = log.messages.iter().filter(|m| m.id > proposal.id);
    for m in after {
        match &m.payload {
            Payload::State(StateFact::CapitalAssessment {
                share, allocated, ..
            }) => {
                if *share != p.share
                    || last.capital.map(|c| c.allocated_capital) != Some(*allocated)
                {
                    return false;
                }
            }
            Payload::State(StateFact::CapacityAssessment {
                share,
                capacity_granted,
            }) if (*share != p.share
                || last.portfolio.map(|c| c.capacity_granted) != Some(*capacity_granted)) =>
            {
                return false;
            }
            _ => {}
        }
    }
    true
}

/// Feasibility of every visited pair, message consistency, and an
/// exhaustive scan for unilateral feasible deviations that gain more than
/// `epsilon` in scalarised reward. Snapshots are recomputed from `env`.
pub fn certify_equilibrium(
    env: &dyn Environment,
    traj: &Trajectory,
    f: &FeasibilitySet,
    grid: &ActionGrid,
    w: &ScalarWeights,
    epsilon: f64,
) -> Certificate {
    if f.validate().is_err() {
        return Certificate {
            feasible: false,
            consistent: false,
            stable: false,
            infeasible_step: Some(0),
            deviation: None,
        };
    }
    let mut history: Vec<Snapshot> = Vec::with_capacity(traj.steps.len());
    let mut infeasible_step = None;
    for (i, step) in traj.steps.iter().enumerate() {
        let snap = env.snapshot(&step.action);
        let ok = f.evaluate(&snap, &history).feasible;
        if !ok && infeasible_step.is_none() {
            infeasible_step = Some(i);
        }
        history.push(snap);
    }
    let last = traj.final_action();
    let consistent = consistent(&traj.messages, &last);
    let prefix = &history[..history.len().saturating_sub(1)];
    let base = scalarize(&env.reward(&last), w);
    let mut deviation = None;
    for (role, d) in grid.deviations(&last) {
        let snap = env.snapshot(&d);
        if !f.evaluate(&snap, prefix).feasible {
            continue;
        }
        let gain = scalarize(&env.reward_at(&d, &snap), w) - base;
        if gain > epsilon {
            deviation = Some(Deviation {
                role: role.into(),
                action: d,
                gain,
            });
            break;
        }
    }
    Certificate {
        feasible: infeasible_step.is_none(),
        consistent,
        stable: deviation.is_none(),
        infeasible_step,
        deviation,
    }
}
