//! Pricing arithmetic and the reward of a joint action.

use reinsim_core::action::ActionProfile;
use reinsim_core::norms::{FeasibilitySet, Scalar, Snapshot};
use reinsim_core::reward::RewardVector;
use reinsim_core::state::GlobalState;
use reinsim_core::Money;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingParams {
    /// Loading per unit of annual loss standard deviation.
    pub k_sigma: f64,
    /// Required return on the capital charge.
    pub target_return: f64,
    /// Expenses as a fraction of premium.
    pub expense_loading: f64,
    /// Spacing of the quoted rate grid.
    pub rate_step: f64,
    /// Fixed catastrophe loading of the rule-based pipeline.
    pub rule_loading: f64,
    /// Granularity of capital allocations, minor units.
    pub capital_step: Money,
}

impl Default for PricingParams {
    fn default() -> Self {
        PricingParams {
            k_sigma: 0.1,
            target_return: 0.1,
            expense_loading: 0.05,
            rate_step: 0.005,
            rule_loading: 0.5,
            capital_step: Money::from_major(10_000),
        }
    }
}

impl PricingParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.k_sigma >= 0.0
            && self.target_return > 0.0
            && (0.0..1.0).contains(&self.expense_loading)
            && self.rate_step > 0.0
            && self.rate_step <= 1.0
            && self.rule_loading >= 0.0
            && self.capital_step > Money::ZERO;
        if ok {
            Ok(())
        } else {
            Err("pricing parameters out of range".into())
        }
    }

    /// Rate on line covering expected loss, a volatility load, the return on
    /// the capital charge and expenses. Capped at 1.
    pub fn technical_rate(
        &self,
        expected: f64,
        sd: f64,
        charge: f64,
        share: f64,
        limit: Money,
    ) -> f64 {
        let l = limit.as_f64();
        if l <= 0.0 {
            return 0.0;
        }
        let capital = if share > 0.0 {
            self.target_return * charge / share
        } else {
            0.0
        };
        ((expected + self.k_sigma * sd + capital) / ((1.0 - self.expense_loading) * l))
            .clamp(0.0, 1.0)
    }

    /// Fixed-loading rate, rounded up to the grid.
    pub fn rule_rate(&self, expected: f64, limit: Money) -> f64 {
        let l = limit.as_f64();
        if l <= 0.0 {
            return 0.0;
        }
        let raw = (1.0 + self.rule_loading) * expected / l + self.rate_step;
        ((raw / self.rate_step).ceil() * self.rate_step).min(1.0)
    }

    /// Uniform quote grid on [0, 1].
    pub fn rate_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.rate_step).round() as usize;
        (0..=n)
            .map(|i| (i as f64 * self.rate_step).min(1.0))
            .collect()
    }

    /// Smallest allocation on the capital grid whose ratio to `charge`
    /// (minor units) meets `threshold`, computed as the norms compute it.
    /// Saturates at the largest representable amount.
    pub fn required_allocation(&self, charge: f64, threshold: f64) -> Money {
        let step = self.capital_step.minor();
        let k = ((threshold * charge) / step as f64).ceil().max(0.0) as i64;
        let Some(mut alloc) = k.checked_mul(step) else {
            return Money(i64::MAX);
        };
        while !meets(Money(alloc), charge, threshold) {
            match alloc.checked_add(step) {
                Some(next) => alloc = next,
                None => return Money(i64::MAX),
            }
        }
        Money(alloc)
    }
}

fn meets(alloc: Money, charge: f64, threshold: f64) -> bool {
    reinsim_core::capital::capital_norm(alloc.major_f64(), charge / 100.0, threshold)
}

/// Anything that can score and snapshot joint actions.
pub trait Environment {
    fn snapshot(&self, a: &ActionProfile) -> Snapshot;
    fn reward(&self, a: &ActionProfile) -> RewardVector;

    /// Reward given a snapshot already taken of `a`.
    fn reward_at(&self, a: &ActionProfile, _snap: &Snapshot) -> RewardVector {
        self.reward(a)
    }
}

/// Ground truth for one treaty: scores use the true terms and simulator outputs.
pub struct EpisodeEnv<'a> {
    pub state: &'a GlobalState,
    pub pricing: &'a PricingParams,
    pub norms: &'a FeasibilitySet,
    /// Mean and sd of the candidate's annual loss.
    moments: (f64, f64),
}

impl<'a> EpisodeEnv<'a> {
    pub fn new(
        state: &'a GlobalState,
        pricing: &'a PricingParams,
        norms: &'a FeasibilitySet,
    ) -> Self {
        let moments = state
            .hazard_view
            .candidate
            .as_ref()
            .map_or((0.0, 0.0), |c| (c.expected(), c.sd()));
        EpisodeEnv {
            state,
            pricing,
            norms,
            moments,
        }
    }

    pub fn technical_rate(&self, share: f64) -> f64 {
        let (el, sd) = self.moments;
        let charge = self.state.capital_view.charge.at(share);
        self.pricing.technical_rate(
            el,
            sd,
            charge,
            share,
            self.state.treaty_view.treaty.terms.total_limit(),
        )
    }

    pub fn reward_of(&self, a: &ActionProfile, snap: &Snapshot) -> RewardVector {
        let limit = self.state.treaty_view.treaty.terms.total_limit().as_f64();
        let share = a.bound_share();
        let line = share * limit;
        let alloc = a.capital.map_or(0.0, |c| c.allocated_capital.as_f64());
        let denom = alloc.max(1.0);
        let el = self.moments.0;
        let bind = a.is_bind();
        let (cap, mut cons) = if bind {
            let rate = a.pricing.map_or(0.0, |p| p.rate_on_line);
            let premium = rate * line;
            let profit = premium * (1.0 - self.pricing.expense_loading) - el * share;
            let cap = if alloc > 0.0 { profit / alloc } else { 0.0 };
            (
                cap,
                (rate - self.technical_rate(share)).abs() * line / denom,
            )
        } else {
            (0.0, 0.0)
        };
        let committed = a.capital.is_some_and(|c| c.allocated_capital > Money::ZERO)
            || a.portfolio
                .is_some_and(|p| p.capacity_granted > Money::ZERO);
        let complete = a.capital.is_some() && a.portfolio.is_some();
        if (bind && !complete) || (!bind && committed) {
            cons += 1.0;
        }
        let hinge = |s: Scalar| (snap.scalar(s) - 1.0).max(0.0).min(f64::MAX);
        let port = if bind {
            hinge(Scalar::ZoneUtilization) + hinge(Scalar::TailVarUtilization)
        } else {
            0.0
        };
        let gov = self.norms.evaluate(snap, &[]).violated.len() as f64;
        RewardVector {
            cap,
            port,
            cons,
            gov,
        }
    }
}

impl Environment for EpisodeEnv<'_> {
    fn snapshot(&self, a: &ActionProfile) -> Snapshot {
        Snapshot::capture(self.state, a)
    }

    fn reward(&self, a: &ActionProfile) -> RewardVector {
        let snap = self.snapshot(a);
        self.reward_of(a, &snap)
    }

    fn reward_at(&self, a: &ActionProfile, snap: &Snapshot) -> RewardVector {
        self.reward_of(a, snap)
    }
}
