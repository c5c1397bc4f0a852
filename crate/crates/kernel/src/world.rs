//! A simulated book of business and the per-treaty views built from it.

use std::collections::BTreeMap;
use std::sync::Arc;

use reinsim_core::capital::{
    charge_schedule, CapitalBook, CapitalConfig, CapitalError, CapitalState,
};
use reinsim_core::folio::{self, simulate_treaty, PortfolioState, TreatyLosses};
use reinsim_core::genesis::{ExposureState, Portfolio};
use reinsim_core::perils::{
    simulate_annual_losses, CorrelationSpec, HazardConfig, HazardError, HazardState,
};
use reinsim_core::state::{ClaimsState, GlobalState, HazardView, RegulatoryState, TreatyState};
use reinsim_core::stats::{self, ShareSchedule};
use reinsim_core::treaty::{TreatyTerms, ZoneId};
use reinsim_core::Money;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Capital(#[from] CapitalError),
    #[error("world configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub hazard: HazardConfig,
    pub capital: CapitalConfig,
    /// Zone appetite as a multiple of the mean zone accumulation of the book.
    pub zone_appetite_multiple: f64,
    /// Tail VaR appetite as a multiple of the book's tail VaR.
    pub tail_var_appetite_multiple: f64,
    pub tail_level: f64,
    /// Replaces the coverage-based own funds when set.
    pub own_funds: Option<Money>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            hazard: HazardConfig::default(),
            capital: CapitalConfig::default(),
            zone_appetite_multiple: 3.0,
            tail_var_appetite_multiple: 1.05,
            tail_level: folio::DEFAULT_TAIL_LEVEL,
            own_funds: None,
        }
    }
}

/// Participation shares a line can take, with zero first.
pub fn share_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// Everything fixed for a run: the in-force book at full share, its
/// hazard sample, capital and appetites.
#[derive(Debug, Clone)]
pub struct World {
    pub portfolio: Portfolio,
    pub exposures: Arc<ExposureState>,
    pub hazard: Arc<HazardState>,
    pub losses: Vec<TreatyLosses>,
    pub book: CapitalBook,
    pub capital: CapitalConfig,
    pub corr: Vec<Vec<f64>>,
    pub own_funds: Money,
    pub total_limit: Money,
    pub accumulation: BTreeMap<ZoneId, Money>,
    pub zone_appetite: Money,
    pub book_total: Vec<f64>,
    pub tail_level: f64,
    pub tail_var_appetite: f64,
}

impl World {
    pub fn build(
        portfolio: Portfolio,
        cfg: &WorldConfig,
        corr: &CorrelationSpec,
        seed: u64,
    ) -> Result<World, WorldError> {
        cfg.capital.validate()?;
        if !(cfg.zone_appetite_multiple > 0.0 && cfg.tail_var_appetite_multiple > 0.0) {
            return Err(WorldError::Config(
                "appetite multiples must be positive".into(),
            ));
        }
        let catalogs = cfg
            .hazard
            .build_catalogs(&portfolio.exposures.zones, seed)?;
        let hazard =
            simulate_annual_losses(&catalogs, &cfg.hazard, &portfolio.exposures, corr, seed)?;
        let losses: Vec<TreatyLosses> = portfolio
            .treaties
            .iter()
            .map(|t| simulate_treaty(&hazard, &t.terms))
            .collect();
        World::from_parts(portfolio, Arc::new(hazard), losses, cfg)
    }

    /// Assembles a world from an already simulated hazard sample.
    pub fn from_parts(
        portfolio: Portfolio,
        hazard: Arc<HazardState>,
        losses: Vec<TreatyLosses>,
        cfg: &WorldConfig,
    ) -> Result<World, WorldError> {
        let n_years = hazard.n_years;
        let mut book = CapitalBook::empty(n_years);
        for l in &losses {
            book.accumulate(&l.keyed, 1.0)?;
        }
        book.refresh(cfg.capital.confidence)?;
        let corr = cfg.capital.correlation_matrix();
        let scr = book.diversified_scr(&corr);
        let own_funds = cfg
            .own_funds
            .unwrap_or_else(|| Money::from_f64(cfg.capital.target_coverage * scr));
        let total_limit = portfolio
            .treaties
            .iter()
            .map(|t| t.terms.total_limit())
            .sum();
        let accumulation = folio::zone_accumulation(portfolio.treaties.iter().map(|t| &t.terms));
        let mean_acc = if accumulation.is_empty() {
            0.0
        } else {
            accumulation.values().map(|m| m.as_f64()).sum::<f64>() / accumulation.len() as f64
        };
        let zone_appetite = Money::from_f64(cfg.zone_appetite_multiple * mean_acc);
        let book_total = book.total_losses();
        let tail = folio::tail_var(&book_total, cfg.tail_level)
            .map_err(|e| WorldError::Config(e.to_string()))?;
        Ok(World {
            exposures: Arc::new(portfolio.exposures.clone()),
            portfolio,
            hazard,
            losses,
            book,
            capital: cfg.capital.clone(),
            corr,
            own_funds,
            total_limit,
            accumulation,
            zone_appetite,
            book_total,
            tail_level: cfg.tail_level,
            tail_var_appetite: cfg.tail_var_appetite_multiple * tail,
        })
    }

    pub fn len(&self) -> usize {
        self.portfolio.treaties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.portfolio.treaties.is_empty()
    }

    /// Own funds the treaty may draw on: a pro-rata share by limit.
    pub fn allocation_budget(&self, index: usize) -> Money {
        let limit = self.portfolio.treaties[index].terms.total_limit();
        if self.total_limit <= Money::ZERO {
            return Money::ZERO;
        }
        Money::from_f64(self.own_funds.as_f64() * limit.as_f64() / self.total_limit.as_f64())
    }

    /// The rest of the book around treaty `index`.
    pub fn rest_of_book(&self, index: usize) -> Result<RestOfBook, WorldError> {
        let mut book = self.book.clone();
        book.accumulate(&self.losses[index].keyed, -1.0)?;
        book.refresh(self.capital.confidence)?;
        let own = &self.losses[index].annual;
        let total: Vec<f64> = self
            .book_total
            .iter()
            .zip(own)
            .map(|(a, b)| a - b)
            .collect();
        let mut accumulation = self.accumulation.clone();
        let t = &self.portfolio.treaties[index].terms;
        for z in &t.zones {
            if let Some(acc) = accumulation.get_mut(z) {
                *acc -= t.total_limit();
            }
        }
        Ok(RestOfBook {
            book,
            total,
            accumulation,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RestOfBook {
    pub book: CapitalBook,
    pub total: Vec<f64>,
    pub accumulation: BTreeMap<ZoneId, Money>,
}

/// A reading of the treaty run through the simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub terms: TreatyTerms,
    pub losses: TreatyLosses,
    pub expected_loss: f64,
    pub sd: f64,
    pub attach_probability: f64,
    pub marginal_scr: ShareSchedule,
    pub charge: ShareSchedule,
    pub tail_var_with: ShareSchedule,
}

/// Simulator access for one treaty's episode. Agents pass their own reading
/// of the terms; the rest of the book is known exactly.
#[derive(Debug, Clone)]
pub struct Tools {
    pub index: usize,
    pub hazard: Arc<HazardState>,
    pub exposures: Arc<ExposureState>,
    pub rest: Arc<RestOfBook>,
    pub capital: CapitalConfig,
    pub corr: Vec<Vec<f64>>,
    pub tail_level: f64,
    pub shares: Vec<f64>,
    truth: Arc<Assessment>,
}

impl Tools {
    pub fn assess(&self, terms: &TreatyTerms) -> Assessment {
        if *terms == self.truth.terms {
            return (*self.truth).clone();
        }
        assess_with(
            &self.hazard,
            &self.rest,
            &self.capital,
            &self.corr,
            self.tail_level,
            &self.shares,
            terms,
        )
    }

    pub fn truth(&self) -> &Assessment {
        &self.truth
    }
}

fn assess_with(
    hazard: &HazardState,
    rest: &RestOfBook,
    capital: &CapitalConfig,
    corr: &[Vec<f64>],
    tail_level: f64,
    shares: &[f64],
    terms: &TreatyTerms,
) -> Assessment {
    let losses = simulate_treaty(hazard, terms);
    let marginal = rest
        .book
        .marginal_scr(&losses.keyed, shares, capital, corr)
        .expect("assessment uses the world's own sample length");
    let marginal_scr = ShareSchedule::new(shares.to_vec(), marginal);
    let charge = charge_schedule(&marginal_scr, terms.total_limit(), capital.min_charge_rate);
    let mut buf = vec![0.0; rest.total.len()];
    let tails = shares
        .iter()
        .map(|s| {
            for ((o, b), c) in buf.iter_mut().zip(&rest.total).zip(&losses.annual) {
                *o = b + s * c;
            }
            stats::quantile_in_place(&mut buf, tail_level).unwrap_or(0.0)
        })
        .collect();
    let n = losses.annual.len().max(1) as f64;
    let attach_probability = losses.annual.iter().filter(|x| **x > 0.0).count() as f64 / n;
    Assessment {
        terms: terms.clone(),
        expected_loss: losses.expected(),
        sd: losses.sd(),
        attach_probability,
        losses,
        marginal_scr,
        charge,
        tail_var_with: ShareSchedule::new(shares.to_vec(), tails),
    }
}

/// Ground-truth state and simulator tools for one treaty.
#[derive(Debug, Clone)]
pub struct EpisodeContext {
    pub state: GlobalState,
    pub tools: Tools,
}

impl World {
    pub fn episode_context(
        &self,
        index: usize,
        regulatory: &RegulatoryState,
    ) -> Result<EpisodeContext, WorldError> {
        let rest = Arc::new(self.rest_of_book(index)?);
        let shares = share_grid();
        let treaty = self.portfolio.treaties[index].clone();
        let truth = assess_with(
            &self.hazard,
            &rest,
            &self.capital,
            &self.corr,
            self.tail_level,
            &shares,
            &treaty.terms,
        );
        let state = self.state_for(index, &rest, &truth, regulatory);
        let tools = Tools {
            index,
            hazard: self.hazard.clone(),
            exposures: self.exposures.clone(),
            rest,
            capital: self.capital.clone(),
            corr: self.corr.clone(),
            tail_level: self.tail_level,
            shares,
            truth: Arc::new(truth),
        };
        Ok(EpisodeContext { state, tools })
    }

    fn state_for(
        &self,
        index: usize,
        rest: &RestOfBook,
        a: &Assessment,
        regulatory: &RegulatoryState,
    ) -> GlobalState {
        let mut capital_view = CapitalState::from_book(&rest.book, &self.corr, self.own_funds);
        capital_view.allocation_budget = self.allocation_budget(index);
        capital_view.marginal_scr = a.marginal_scr.clone();
        capital_view.charge = a.charge.clone();
        let appetite = self.zone_appetite.as_f64();
        let capacity_used = rest
            .accumulation
            .iter()
            .map(|(z, m)| {
                (
                    *z,
                    if appetite > 0.0 {
                        m.as_f64() / appetite
                    } else {
                        0.0
                    },
                )
            })
            .collect();
        let portfolio_view = PortfolioState {
            zone_accumulation: rest.accumulation.clone(),
            tail_var: a.tail_var_with.at(0.0),
            tail_level: self.tail_level,
            capacity_used,
            zone_appetite: self.zone_appetite,
            tail_var_appetite: self.tail_var_appetite,
            tail_var_with: a.tail_var_with.clone(),
        };
        GlobalState {
            treaty_view: TreatyState {
                treaty: self.portfolio.treaties[index].clone(),
            },
            exposure_view: self.exposures.clone(),
            hazard_view: HazardView {
                simulation: self.hazard.clone(),
                candidate: Some(a.losses.clone()),
            },
            capital_view,
            portfolio_view,
            claims_view: ClaimsState::default(),
            regulatory_view: regulatory.clone(),
        }
    }
}

/// The state an agent believes in: ground truth with the treaty replaced by
/// its reading and the simulator outputs that reading implies.
pub fn believed_state(truth: &GlobalState, a: &Assessment) -> GlobalState {
    let mut s = truth.clone();
    s.treaty_view.treaty.terms = a.terms.clone();
    s.hazard_view.candidate = Some(a.losses.clone());
    s.capital_view.marginal_scr = a.marginal_scr.clone();
    s.capital_view.charge = a.charge.clone();
    s.portfolio_view.tail_var_with = a.tail_var_with.clone();
    s
}
