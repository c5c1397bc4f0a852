//! A fixed pipeline seen as a one-agent instance: full observation, a
//! single action per state and no communication.

use reinsim_core::action::ActionProfile;
use reinsim_core::message::MessageLog;
use reinsim_core::norms::{FeasibilitySet, Snapshot};
use reinsim_core::state::GlobalState;

use crate::equilibrium::{consistent, Certificate, Step, Trajectory};

pub struct DegenerateInstance<F> {
    pipeline: F,
}

pub fn degenerate_adapter<F>(pipeline: F) -> DegenerateInstance<F>
where
    F: Fn(&GlobalState) -> ActionProfile,
{
    DegenerateInstance { pipeline }
}

/// The realised trajectory and its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterRun {
    pub trajectory: Trajectory,
    pub certificate: Certificate,
}

impl<F> DegenerateInstance<F>
where
    F: Fn(&GlobalState) -> ActionProfile,
{
    pub fn act(&self, s: &GlobalState) -> ActionProfile {
        (self.pipeline)(s)
    }

    /// Applies the pipeline to each state in turn. The agent has one action
    /// per state, so stability holds vacuously; feasibility is checked
    /// against the realised history.
    pub fn run(&self, states: &[GlobalState], f: &FeasibilitySet) -> AdapterRun {
        let mut steps: Vec<Step> = Vec::with_capacity(states.len());
        let mut history: Vec<Snapshot> = Vec::with_capacity(states.len());
        let mut infeasible_step = None;
        for (i, s) in states.iter().enumerate() {
            let action = self.act(s);
            let snapshot = Snapshot::capture(s, &action);
            let feasibility = f.check_snapshot(&snapshot, &history).unwrap_or_default();
            if !feasibility.feasible && infeasible_step.is_none() {
                infeasible_step = Some(i);
            }
            history.push(snapshot.clone());
            steps.push(Step {
                round: i as u32 + 1,
                action,
                snapshot,
                feasibility,
            });
        }
        let messages = MessageLog::default();
        let last = steps.last().map(|s| s.action.clone()).unwrap_or_default();
        let certificate = Certificate {
            feasible: infeasible_step.is_none(),
            consistent: consistent(&messages, &last),
            stable: true,
            infeasible_step,
            deviation: None,
        };
        AdapterRun {
            trajectory: Trajectory { steps, messages },
            certificate,
        }
    }
}
