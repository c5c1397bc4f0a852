//! Ordering checks across environment settings.

use reinsim_kernel::episode::EscalationReason;
use reinsim_kernel::Profile;
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::metrics::{EpisodeRecord, Metric, MetricsRow};

/// Orderings the configured mechanisms imply, checked on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structural {
    pub interpretation_multi_le_nogov: bool,
    pub interpretation_multi_le_single: bool,
    pub escalation_multi_le_nogov: bool,
    pub escalation_multi_le_single: bool,
    pub multi_mean_rounds: Option<f64>,
    pub max_rounds: u32,
    /// Multi-agent episodes that settled or escalated before the round cap.
    pub multi_within_cap: f64,
}

impl Structural {
    pub fn holds(&self) -> bool {
        self.interpretation_multi_le_nogov
            && self.interpretation_multi_le_single
            && self.escalation_multi_le_nogov
            && self.escalation_multi_le_single
            && self
                .multi_mean_rounds
                .is_some_and(|r| r <= f64::from(self.max_rounds))
            && self.multi_within_cap >= 0.95
    }
}

fn row(rows: &[MetricsRow], p: Profile) -> Option<&MetricsRow> {
    rows.iter().find(|r| r.profile == p)
}

pub fn structural(rows: &[MetricsRow], records: &[EpisodeRecord], max_rounds: u32) -> Structural {
    let get = |p, m| row(rows, p).and_then(|r| r.value(m)).unwrap_or(f64::NAN);
    let le = |m, other| get(Profile::MultiAgent, m) <= get(other, m);
    let multi: Vec<&EpisodeRecord> = records
        .iter()
        .filter(|r| r.profile == Profile::MultiAgent)
        .collect();
    let timeouts = multi
        .iter()
        .filter(|r| r.escalation == Some(EscalationReason::MaxRounds))
        .count();
    Structural {
        interpretation_multi_le_nogov: le(Metric::InterpretationError, Profile::NoGovernance),
        interpretation_multi_le_single: le(Metric::InterpretationError, Profile::SingleAgent),
        escalation_multi_le_nogov: le(Metric::HumanIntervention, Profile::NoGovernance),
        escalation_multi_le_single: le(Metric::HumanIntervention, Profile::SingleAgent),
        multi_mean_rounds: row(rows, Profile::MultiAgent).and_then(|r| r.coordination_rounds),
        max_rounds,
        multi_within_cap: if multi.is_empty() {
            0.0
        } else {
            1.0 - timeouts as f64 / multi.len() as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub rows: Vec<MetricsRow>,
    pub structural: Structural,
}

/// Pairs of profiles whose order on a metric differs between two runs.
/// Ties and absent values never count as a swap.
pub fn swapped_pairs(
    base: &[MetricsRow],
    other: &[MetricsRow],
    m: Metric,
) -> Vec<(Profile, Profile)> {
    let mut out = Vec::new();
    for (i, a) in Profile::ALL.iter().enumerate() {
        for b in &Profile::ALL[i + 1..] {
            let sign = |rows: &[MetricsRow]| {
                let x = row(rows, *a)?.value(m)?;
                let y = row(rows, *b)?.value(m)?;
                x.partial_cmp(&y)
            };
            if let (Some(s), Some(t)) = (sign(base), sign(other)) {
                if s.is_ne() && t.is_ne() && s != t {
                    out.push((*a, *b));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub metric: Metric,
    pub preserved: bool,
    pub swapped: Vec<(Profile, Profile)>,
}

pub fn ordering_checks(base: &[MetricsRow], other: &[MetricsRow]) -> Vec<OrderingCheck> {
    Metric::ALL
        .into_iter()
        .map(|metric| {
            let swapped = swapped_pairs(base, other, metric);
            OrderingCheck {
                metric,
                preserved: swapped.is_empty(),
                swapped,
            }
        })
        .collect()
}

/// The base run and every other setting, each compared with the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub scenarios: Vec<ScenarioResult>,
    pub orderings: Vec<Vec<OrderingCheck>>,
}

impl Sensitivity {
    pub fn new(scenarios: Vec<ScenarioResult>) -> Sensitivity {
        let orderings = match scenarios.first() {
            Some(base) => scenarios
                .iter()
                .map(|s| ordering_checks(&base.rows, &s.rows))
                .collect(),
            None => Vec::new(),
        };
        Sensitivity {
            scenarios,
            orderings,
        }
    }

    pub fn structural_holds(&self) -> bool {
        self.scenarios.iter().all(|s| s.structural.holds())
    }
}
