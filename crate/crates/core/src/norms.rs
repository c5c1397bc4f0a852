//! Norms as admissibility predicates and the feasibility test.
//!
//! Predicates are a closed language over a [`Snapshot`]: named scalars
//! computed from a (state, action) pair, the accept flag and the treaty's
//! zones and perils. Anything neither prohibited nor in breach of an
//! obligation is permitted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::action::ActionProfile;
use crate::capital;
use crate::state::GlobalState;
use crate::treaty::{Peril, ZoneId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scalar {
    /// Allocated capital over the capital charge of the bound line.
    SolvencyRatio,
    SolvencyThreshold,
    /// Own funds over book SCR including the bound line.
    BookSolvencyRatio,
    AllocatedCapital,
    CapitalBudget,
    CapitalCharge,
    MarginalScr,
    /// Highest accumulation over appetite among the treaty's zones.
    ZoneUtilization,
    TailVarUtilization,
    RateOnLine,
    Share,
    Line,
    CapacityGranted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Value(f64),
    Scalar(Scalar),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Compare {
        lhs: Scalar,
        op: CmpOp,
        rhs: Operand,
    },
    Accepted,
    CoversAnyZone(BTreeSet<ZoneId>),
    CoversAnyPeril(BTreeSet<Peril>),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Not(Box<Predicate>),
    /// The condition holds on at most `max_run` consecutive steps ending now.
    Consecutive {
        condition: Box<Predicate>,
        max_run: usize,
    },
    /// The condition holds on at most `max` steps of the prefix plus now.
    CountAtMost {
        condition: Box<Predicate>,
        max: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Obligation,
    Prohibition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScope {
    Pointwise,
    HistoryDependent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSource {
    Regulatory,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub id: String,
    pub kind: NormKind,
    pub scope: NormScope,
    pub predicate: Predicate,
    pub source: NormSource,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormError {
    #[error("norm {id}: {reason}")]
    Config { id: String, reason: String },
}

/// What a predicate can see of one (state, action) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub scalars: BTreeMap<Scalar, f64>,
    pub accepted: bool,
    pub zones: BTreeSet<ZoneId>,
    pub perils: BTreeSet<Peril>,
}

fn finite_ratio(num: f64, den: f64) -> f64 {
    let r = capital::solvency_ratio(num, den);
    r.clamp(f64::MIN, f64::MAX)
}

impl Snapshot {
    /// Money-valued scalars are in major units.
    pub fn capture(s: &GlobalState, a: &ActionProfile) -> Snapshot {
        let terms = &s.treaty_view.treaty.terms;
        let share = a.bound_share();
        let line = share * terms.total_limit().as_f64() / 100.0;
        let cap = &s.capital_view;
        let port = &s.portfolio_view;
        let charge = cap.charge.at(share) / 100.0;
        let marginal = cap.marginal_scr.at(share) / 100.0;
        let allocated = a.capital.map_or(0.0, |c| c.allocated_capital.major_f64());
        let zone_util = terms
            .zones
            .iter()
            .map(|z| {
                let acc = port.zone_accumulation.get(z).map_or(0.0, |m| m.major_f64()) + line;
                finite_ratio(acc, port.zone_appetite.major_f64())
            })
            .fold(0.0, f64::max);
        let tail = port.tail_var_with.at(share);
        let scalars = BTreeMap::from([
            (Scalar::SolvencyRatio, finite_ratio(allocated, charge)),
            (
                Scalar::SolvencyThreshold,
                s.regulatory_view.solvency_threshold,
            ),
            (
                Scalar::BookSolvencyRatio,
                finite_ratio(
                    cap.own_funds.major_f64(),
                    cap.diversified_scr.major_f64() + marginal,
                ),
            ),
            (Scalar::AllocatedCapital, allocated),
            (Scalar::CapitalBudget, cap.allocation_budget.major_f64()),
            (Scalar::CapitalCharge, charge),
            (Scalar::MarginalScr, marginal),
            (Scalar::ZoneUtilization, zone_util),
            (
                Scalar::TailVarUtilization,
                finite_ratio(tail, port.tail_var_appetite),
            ),
            (
                Scalar::RateOnLine,
                a.pricing.map_or(0.0, |p| p.rate_on_line),
            ),
            (Scalar::Share, share),
            (Scalar::Line, line),
            (
                Scalar::CapacityGranted,
                a.portfolio.map_or(0.0, |p| p.capacity_granted.major_f64()),
            ),
        ]);
        Snapshot {
            scalars,
            accepted: a.is_bind(),
            zones: terms.zones.clone(),
            perils: terms.perils.clone(),
        }
    }

    pub fn scalar(&self, s: Scalar) -> f64 {
        self.scalars.get(&s).copied().unwrap_or(f64::NAN)
    }
}

impl Predicate {
    fn has_history(&self) -> bool {
        match self {
            Predicate::Consecutive { .. } | Predicate::CountAtMost { .. } => true,
            Predicate::All(ps) | Predicate::Any(ps) => ps.iter().any(Predicate::has_history),
            Predicate::Not(p) => p.has_history(),
            _ => false,
        }
    }

    fn check_config(&self) -> Result<(), String> {
        match self {
            Predicate::Compare {
                rhs: Operand::Value(v),
                ..
            } if !v.is_finite() => Err(format!("comparison constant {v} is not finite")),
            Predicate::CoversAnyZone(z) if z.is_empty() => Err("empty zone set".into()),
            Predicate::CoversAnyPeril(p) if p.is_empty() => Err("empty peril set".into()),
            Predicate::All(ps) | Predicate::Any(ps) => {
                ps.iter().try_for_each(Predicate::check_config)
            }
            Predicate::Not(p) => p.check_config(),
            Predicate::Consecutive { condition, .. } | Predicate::CountAtMost { condition, .. } => {
                if condition.has_history() {
                    Err("history constructs cannot nest".into())
                } else {
                    condition.check_config()
                }
            }
            _ => Ok(()),
        }
    }

    fn eval_now(&self, now: &Snapshot) -> bool {
        self.eval(now, &[])
    }

    pub fn eval(&self, now: &Snapshot, history: &[Snapshot]) -> bool {
        match self {
            Predicate::Compare { lhs, op, rhs } => {
                let b = match rhs {
                    Operand::Value(v) => *v,
                    Operand::Scalar(s) => now.scalar(*s),
                };
                op.apply(now.scalar(*lhs), b)
            }
            Predicate::Accepted => now.accepted,
            Predicate::CoversAnyZone(z) => !now.zones.is_disjoint(z),
            Predicate::CoversAnyPeril(p) => !now.perils.is_disjoint(p),
            Predicate::All(ps) => ps.iter().all(|p| p.eval(now, history)),
            Predicate::Any(ps) => ps.iter().any(|p| p.eval(now, history)),
            Predicate::Not(p) => !p.eval(now, history),
            Predicate::Consecutive { condition, max_run } => {
                if !condition.eval_now(now) {
                    return true;
                }
                let run = 1 + history
                    .iter()
                    .rev()
                    .take_while(|h| condition.eval_now(h))
                    .count();
                run <= *max_run
            }
            Predicate::CountAtMost { condition, max } => {
                let n = usize::from(condition.eval_now(now))
                    + history.iter().filter(|h| condition.eval_now(h)).count();
                n <= *max
            }
        }
    }
}

impl NormSpec {
    pub fn validate(&self) -> Result<(), NormError> {
        let err = |reason: String| NormError::Config {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(err("empty norm id".into()));
        }
        if self.scope == NormScope::Pointwise && self.predicate.has_history() {
            return Err(err("pointwise norm reads the trajectory".into()));
        }
        self.predicate.check_config().map_err(err)
    }

    pub fn satisfied(&self, now: &Snapshot, history: &[Snapshot]) -> bool {
        let h = match self.scope {
            NormScope::Pointwise => &[][..],
            NormScope::HistoryDependent => history,
        };
        let holds = self.predicate.eval(now, h);
        match self.kind {
            NormKind::Obligation => holds,
            NormKind::Prohibition => !holds,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilitySet {
    pub norms: Vec<NormSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: BTreeSet<String>,
}

impl FeasibilitySet {
    pub fn new(norms: Vec<NormSpec>) -> Result<Self, NormError> {
        let f = FeasibilitySet { norms };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), NormError> {
        let mut seen = BTreeSet::new();
        for n in &self.norms {
            n.validate()?;
            if !seen.insert(n.id.as_str()) {
                return Err(NormError::Config {
                    id: n.id.clone(),
                    reason: "duplicate norm id".into(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&NormSpec> {
        self.norms.iter().find(|n| n.id == id)
    }

    pub fn check_snapshot(
        &self,
        now: &Snapshot,
        history: &[Snapshot],
    ) -> Result<Feasibility, NormError> {
        self.validate()?;
        Ok(self.evaluate(now, history))
    }

    /// As [`FeasibilitySet::check_snapshot`] for a set already validated.
    pub fn evaluate(&self, now: &Snapshot, history: &[Snapshot]) -> Feasibility {
        let violated: BTreeSet<String> = self
            .norms
            .iter()
            .filter(|n| !n.satisfied(now, history))
            .map(|n| n.id.clone())
            .collect();
        Feasibility {
            feasible: violated.is_empty(),
            violated,
        }
    }

    /// The default book: regulatory solvency plus internal capital, capacity,
    /// accumulation and tail appetite.
    pub fn standard() -> Self {
        use Predicate::*;
        let bound = |p: Predicate| Any(vec![Not(Box::new(Accepted)), p]);
        let cmp = |lhs, op, rhs| Compare { lhs, op, rhs };
        let obligation = |id: &str, source, predicate| NormSpec {
            id: id.into(),
            kind: NormKind::Obligation,
            scope: NormScope::Pointwise,
            predicate,
            source,
        };
        let prohibition = |id: &str, predicate| NormSpec {
            id: id.into(),
            kind: NormKind::Prohibition,
            scope: NormScope::Pointwise,
            predicate,
            source: NormSource::Internal,
        };
        FeasibilitySet {
            norms: vec![
                obligation(
                    "solvency",
                    NormSource::Regulatory,
                    bound(cmp(
                        Scalar::SolvencyRatio,
                        CmpOp::Ge,
                        Operand::Scalar(Scalar::SolvencyThreshold),
                    )),
                ),
                obligation(
                    "capital_allocation",
                    NormSource::Internal,
                    cmp(
                        Scalar::AllocatedCapital,
                        CmpOp::Le,
                        Operand::Scalar(Scalar::CapitalBudget),
                    ),
                ),
                obligation(
                    "capacity",
                    NormSource::Internal,
                    bound(cmp(
                        Scalar::Line,
                        CmpOp::Le,
                        Operand::Scalar(Scalar::CapacityGranted),
                    )),
                ),
                prohibition(
                    "zone_accumulation",
                    All(vec![
                        Accepted,
                        cmp(Scalar::ZoneUtilization, CmpOp::Gt, Operand::Value(1.0)),
                    ]),
                ),
                prohibition(
                    "tail_var",
                    All(vec![
                        Accepted,
                        cmp(Scalar::TailVarUtilization, CmpOp::Gt, Operand::Value(1.0)),
                    ]),
                ),
            ],
        }
    }
}

/// Membership of (s, a) given the trajectory prefix.
pub fn check_feasible(
    f: &FeasibilitySet,
    s: &GlobalState,
    a: &ActionProfile,
    history: &[Snapshot],
) -> Result<Feasibility, NormError> {
    f.check_snapshot(&Snapshot::capture(s, a), history)
}
