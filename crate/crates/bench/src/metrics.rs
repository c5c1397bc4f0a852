//! Metrics as pure functions of per-episode records.

use std::collections::{BTreeMap, BTreeSet};

use reinsim_core::stats;
use reinsim_kernel::episode::EscalationReason;
use reinsim_kernel::{EpisodeOutcome, Profile};
use serde::{Deserialize, Serialize};

/// What the metrics need from one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub treaty: usize,
    pub profile: Profile,
    pub seed: u64,
    pub rounds: Option<u32>,
    pub escalated: bool,
    pub escalation: Option<EscalationReason>,
    pub bound: bool,
    pub rate_on_line: Option<f64>,
    pub share: f64,
    pub interpretation_errors: usize,
    pub interpretation_fields: usize,
    /// Minor units.
    pub premium: f64,
    pub expected_loss: f64,
    pub marginal_scr: f64,
    pub violated: BTreeSet<String>,
    pub messages: usize,
    /// Certificate checks, when the profile is certified.
    pub certified: Option<[bool; 3]>,
    pub equilibrium: bool,
    pub audit_head: String,
}

impl From<&EpisodeOutcome> for EpisodeRecord {
    fn from(o: &EpisodeOutcome) -> Self {
        EpisodeRecord {
            treaty: o.index,
            profile: o.profile,
            seed: o.seed,
            rounds: o.rounds,
            escalated: o.escalated,
            escalation: o.escalation,
            bound: o.bound,
            rate_on_line: o.recommended_rate,
            share: o.final_action.bound_share(),
            interpretation_errors: o.interpretation_errors,
            interpretation_fields: o.interpretation_fields,
            premium: o.premium,
            expected_loss: o.expected_loss,
            marginal_scr: o.marginal_scr,
            violated: o.violated.clone(),
            messages: o.messages,
            certified: o
                .certificate
                .as_ref()
                .map(|c| [c.feasible, c.consistent, c.stable]),
            equilibrium: o.equilibrium,
            audit_head: o.audit_head.clone(),
        }
    }
}

impl EpisodeRecord {
    pub fn interpretation_error(&self) -> f64 {
        if self.interpretation_fields == 0 {
            0.0
        } else {
            self.interpretation_errors as f64 / self.interpretation_fields as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("pricing variance needs at least two seeds, got {0}")]
    Seeds(usize),
    #[error("no treaty has a recommended rate under two or more seeds")]
    NoRepeatedRates,
    #[error("total marginal SCR of accepted treaties is {0}, not positive")]
    Scr(f64),
    #[error("cannot normalise by a reference variance of {0}")]
    Reference(f64),
    #[error("no episodes for profile {0}")]
    Empty(Profile),
}

/// Mean over treaties of the across-seed sample variance of the recommended
/// rate on line. Treaties quoted under fewer than two seeds are skipped.
pub fn metric_pricing_variance(records: &[EpisodeRecord]) -> Result<f64, MetricError> {
    let seeds: BTreeSet<u64> = records.iter().map(|r| r.seed).collect();
    if seeds.len() < 2 {
        return Err(MetricError::Seeds(seeds.len()));
    }
    let mut by_treaty: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(rate) = r.rate_on_line {
            by_treaty.entry(r.treaty).or_default().push(rate);
        }
    }
    let vars: Vec<f64> = by_treaty
        .values()
        .filter(|v| v.len() >= 2)
        .filter_map(|v| stats::variance(v).ok())
        .collect();
    stats::mean(&vars).map_err(|_| MetricError::NoRepeatedRates)
}

/// Profit net of expenses per unit of marginal SCR over bound treaties;
/// `None` when nothing was bound.
pub fn metric_capital_efficiency(
    records: &[EpisodeRecord],
    expense_ratio: f64,
) -> Result<Option<f64>, MetricError> {
    let bound: Vec<&EpisodeRecord> = records.iter().filter(|r| r.bound).collect();
    if bound.is_empty() {
        return Ok(None);
    }
    let profit: f64 = bound
        .iter()
        .map(|r| r.premium - r.expected_loss - expense_ratio * r.premium)
        .sum();
    let scr: f64 = bound.iter().map(|r| r.marginal_scr).sum();
    if !(scr > 0.0) {
        return Err(MetricError::Scr(scr));
    }
    Ok(Some(profit / scr))
}

/// Share of clause-level fields misread, averaged over episodes.
pub fn metric_interpretation_error(records: &[EpisodeRecord]) -> f64 {
    let e: Vec<f64> = records
        .iter()
        .map(EpisodeRecord::interpretation_error)
        .collect();
    stats::mean(&e).unwrap_or(0.0)
}

pub fn metric_rounds(records: &[EpisodeRecord]) -> Option<f64> {
    let r: Vec<f64> = records
        .iter()
        .filter_map(|r| r.rounds.map(f64::from))
        .collect();
    stats::mean(&r).ok()
}

pub fn metric_escalations(records: &[EpisodeRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.escalated).count() as f64 / records.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub profile: Profile,
    pub system: String,
    /// Relative to the rule-based pipeline.
    pub pricing_variance: f64,
    pub pricing_variance_raw: f64,
    pub capital_efficiency: Option<f64>,
    pub interpretation_error: f64,
    pub coordination_rounds: Option<f64>,
    pub human_intervention: f64,
    pub episodes: usize,
}

impl MetricsRow {
    pub fn value(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::PricingVariance => Some(self.pricing_variance),
            Metric::CapitalEfficiency => self.capital_efficiency,
            Metric::InterpretationError => Some(self.interpretation_error),
            Metric::CoordinationRounds => self.coordination_rounds,
            Metric::HumanIntervention => Some(self.human_intervention),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PricingVariance,
    CapitalEfficiency,
    InterpretationError,
    CoordinationRounds,
    HumanIntervention,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::PricingVariance,
        Metric::CapitalEfficiency,
        Metric::InterpretationError,
        Metric::CoordinationRounds,
        Metric::HumanIntervention,
    ];

    pub fn higher_is_better(self) -> bool {
        self == Metric::CapitalEfficiency
    }

    pub fn header(self) -> &'static str {
        match self {
            Metric::PricingVariance => "Pricing Var.",
            Metric::CapitalEfficiency => "Capital Eff.",
            Metric::InterpretationError => "Interp. Error",
            Metric::CoordinationRounds => "Coord. Rounds",
            Metric::HumanIntervention => "Human Interv.",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::PricingVariance => "pricing_variance",
            Metric::CapitalEfficiency => "capital_efficiency",
            Metric::InterpretationError => "interpretation_error",
            Metric::CoordinationRounds => "coordination_rounds",
            Metric::HumanIntervention => "human_intervention",
        }
    }
}

/// One row per profile, in the fixed report order. Pricing variance is
/// normalised by the rule-based row, which must be present.
pub fn metrics_rows(
    records: &[EpisodeRecord],
    expense_ratio: f64,
) -> Result<Vec<MetricsRow>, MetricError> {
    let of = |p: Profile| {
        records
            .iter()
            .filter(|r| r.profile == p)
            .cloned()
            .collect::<Vec<_>>()
    };
    let reference = metric_pricing_variance(&of(Profile::RuleBased))?;
    Profile::ALL
        .into_iter()
        .map(|p| {
            let rs = of(p);
            if rs.is_empty() {
                return Err(MetricError::Empty(p));
            }
            let raw = metric_pricing_variance(&rs)?;
            let pricing_variance = if p == Profile::RuleBased {
                1.0
            } else if reference > 0.0 {
                raw / reference
            } else {
                return Err(MetricError::Reference(reference));
            };
            Ok(MetricsRow {
                profile: p,
                system: p.label().to_string(),
                pricing_variance,
                pricing_variance_raw: raw,
                capital_efficiency: metric_capital_efficiency(&rs, expense_ratio)?,
                interpretation_error: metric_interpretation_error(&rs),
                coordination_rounds: metric_rounds(&rs),
                human_intervention: metric_escalations(&rs),
                episodes: rs.len(),
            })
        })
        .collect()
}

/// Reference values reported for LLM agents; shown for context only.
pub const REFERENCE_LABEL: &str = "paper (LLM-based, not reproduced)";

pub fn reported_reference(p: Profile) -> [Option<f64>; 5] {
    match p {
        Profile::RuleBased => [Some(1.00), Some(0.74), Some(0.19), None, Some(0.42)],
        Profile::SingleAgent => [Some(0.82), Some(0.79), Some(0.14), Some(11.2), Some(0.31)],
        Profile::MultiAgent => [Some(0.63), Some(0.83), Some(0.10), Some(6.8), Some(0.18)],
        Profile::NoGovernance => [Some(0.72), Some(0.81), Some(0.16), Some(7.1), Some(0.27)],
    }
}
