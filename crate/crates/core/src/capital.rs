//! Standard-formula style capital: per-key SCR components at 99.5%,
//! correlation aggregation, marginal SCR and the solvency test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, MatrixError};
use crate::money::Money;
use crate::stats::{self, ShareSchedule};
use crate::treaty::{LineOfBusiness, Peril, TreatyTerms};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CapitalError {
    #[error("empty loss sample")]
    EmptySample,
    #[error("confidence level {0} outside (0, 1)")]
    Level(f64),
    #[error("correlation matrix: {0}")]
    Matrix(#[from] MatrixError),
    #[error("capital configuration: {0}")]
    Config(String),
    #[error("loss series lengths differ ({0} vs {1})")]
    Length(usize, usize),
}

/// Risk keys: catastrophe business splits by peril, other lines by line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapitalKey {
    Wind,
    Flood,
    Wildfire,
    PropertyPerRisk,
    Casualty,
}

impl CapitalKey {
    pub const ALL: [CapitalKey; 5] = [
        CapitalKey::Wind,
        CapitalKey::Flood,
        CapitalKey::Wildfire,
        CapitalKey::PropertyPerRisk,
        CapitalKey::Casualty,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn for_loss(lob: LineOfBusiness, peril: Peril) -> CapitalKey {
        match lob {
            LineOfBusiness::PropertyCat => match peril {
                Peril::Wind => CapitalKey::Wind,
                Peril::Flood => CapitalKey::Flood,
                Peril::Wildfire => CapitalKey::Wildfire,
            },
            LineOfBusiness::PropertyPerRisk => CapitalKey::PropertyPerRisk,
            LineOfBusiness::Casualty => CapitalKey::Casualty,
        }
    }

    pub fn keys_of(terms: &TreatyTerms) -> Vec<CapitalKey> {
        let mut keys: Vec<CapitalKey> = terms
            .perils
            .iter()
            .map(|p| CapitalKey::for_loss(terms.line_of_business, *p))
            .collect();
        keys.dedup();
        keys
    }

    fn is_property(self) -> bool {
        self != CapitalKey::Casualty
    }
}

pub const SCR_CONFIDENCE: f64 = 0.995;

/// Empirical VaR at `confidence` minus the mean, floored at zero.
pub fn scr_component(samples: &[f64], confidence: f64) -> Result<f64, CapitalError> {
    if samples.is_empty() {
        return Err(CapitalError::EmptySample);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CapitalError::Level(confidence));
    }
    let mut buf = samples.to_vec();
    scr_component_in_place(&mut buf, confidence)
}

/// As `scr_component`, reordering `buf`.
pub fn scr_component_in_place(buf: &mut [f64], confidence: f64) -> Result<f64, CapitalError> {
    let mean = stats::mean(buf).map_err(|_| CapitalError::EmptySample)?;
    let q = stats::quantile_in_place(buf, confidence).map_err(|e| match e {
        stats::StatsError::Empty => CapitalError::EmptySample,
        stats::StatsError::Level(l) => CapitalError::Level(l),
    })?;
    Ok((q - mean).max(0.0))
}

/// `sqrt(sᵀ C s)`; `C` must be a valid correlation matrix.
pub fn aggregate_scr(components: &[f64], corr: &[Vec<f64>]) -> Result<f64, CapitalError> {
    if corr.len() != components.len() {
        return Err(MatrixError::Dimension {
            expected: corr.len(),
            got: components.len(),
        }
        .into());
    }
    linalg::validate_correlation(corr)?;
    linalg::cholesky_psd(corr)?;
    Ok(aggregate_unchecked(components, corr))
}

pub(crate) fn aggregate_unchecked(components: &[f64], corr: &[Vec<f64>]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in corr.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            acc += components[i] * c * components[j];
        }
    }
    acc.max(0.0).sqrt()
}

/// Own funds over SCR against a threshold; no risk needs no capital.
pub fn capital_norm(own_funds: f64, scr: f64, threshold: f64) -> bool {
    if scr <= 0.0 {
        return own_funds >= 0.0;
    }
    own_funds / scr >= threshold
}

pub fn solvency_ratio(own_funds: f64, scr: f64) -> f64 {
    if scr > 0.0 {
        own_funds / scr
    } else if own_funds >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapitalConfig {
    pub confidence: f64,
    /// Correlation between two property keys (perils and per-risk).
    pub property_correlation: f64,
    /// Correlation between casualty and any property key.
    pub casualty_correlation: f64,
    /// Own funds held as a multiple of the book's diversified SCR.
    pub target_coverage: f64,
    /// Capital charged per unit of capacity on top of marginal SCR.
    pub min_charge_rate: f64,
}

impl Default for CapitalConfig {
    fn default() -> Self {
        CapitalConfig {
            confidence: SCR_CONFIDENCE,
            property_correlation: 0.25,
            casualty_correlation: 0.5,
            target_coverage: 1.3,
            min_charge_rate: 0.01,
        }
    }
}

impl CapitalConfig {
    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        CapitalKey::ALL
            .iter()
            .map(|a| {
                CapitalKey::ALL
                    .iter()
                    .map(|b| {
                        if a == b {
                            1.0
                        } else if a.is_property() && b.is_property() {
                            self.property_correlation
                        } else {
                            self.casualty_correlation
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CapitalError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CapitalError::Level(self.confidence));
        }
        if !(self.target_coverage > 0.0) || !(self.min_charge_rate >= 0.0) {
            return Err(CapitalError::Config(
                "target_coverage must be positive and min_charge_rate non-negative".into(),
            ));
        }
        let m = self.correlation_matrix();
        linalg::validate_correlation(&m)?;
        linalg::cholesky_psd(&m)?;
        Ok(())
    }
}

/// Annual losses per key (all keys, possibly zero series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyedLosses {
    pub n_years: usize,
    pub series: BTreeMap<CapitalKey, Vec<f64>>,
}

impl KeyedLosses {
    pub fn new(n_years: usize) -> Self {
        KeyedLosses {
            n_years,
            series: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, key: CapitalKey, year: usize, loss: f64) {
        let n = self.n_years;
        self.series.entry(key).or_insert_with(|| vec![0.0; n])[year] += loss;
    }

    pub fn total(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_years];
        for s in self.series.values() {
            for (a, b) in t.iter_mut().zip(s) {
                *a += b;
            }
        }
        t
    }
}

/// A book's per-key annual aggregates with cached components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalBook {
    pub n_years: usize,
    pub totals: Vec<Vec<f64>>,
    pub components: Vec<f64>,
}

impl CapitalBook {
    pub fn empty(n_years: usize) -> Self {
        CapitalBook {
            n_years,
            totals: vec![vec![0.0; n_years]; CapitalKey::ALL.len()],
            components: vec![0.0; CapitalKey::ALL.len()],
        }
    }

    /// Adds `scale` times `losses`, without refreshing components.
    pub fn accumulate(&mut self, losses: &KeyedLosses, scale: f64) -> Result<(), CapitalError> {
        if losses.n_years != self.n_years {
            return Err(CapitalError::Length(losses.n_years, self.n_years));
        }
        for (k, s) in &losses.series {
            for (a, b) in self.totals[k.index()].iter_mut().zip(s) {
                *a += scale * b;
            }
        }
        Ok(())
    }

    pub fn refresh(&mut self, confidence: f64) -> Result<(), CapitalError> {
        let mut buf = vec![0.0; self.n_years];
        for (i, t) in self.totals.iter().enumerate() {
            buf.copy_from_slice(t);
            self.components[i] = scr_component_in_place(&mut buf, confidence)?;
        }
        Ok(())
    }

    pub fn diversified_scr(&self, corr: &[Vec<f64>]) -> f64 {
        aggregate_unchecked(&self.components, corr)
    }

    pub fn total_losses(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_years];
        for s in &self.totals {
            for (a, b) in t.iter_mut().zip(s) {
                *a += b;
            }
        }
        t
    }

    /// SCR of this book plus `share` times `candidate` for each share, with
    /// only the candidate's keys recomputed.
    pub fn scr_with(
        &self,
        candidate: &KeyedLosses,
        shares: &[f64],
        cfg: &CapitalConfig,
        corr: &[Vec<f64>],
    ) -> Result<Vec<f64>, CapitalError> {
        if candidate.n_years != self.n_years {
            return Err(CapitalError::Length(candidate.n_years, self.n_years));
        }
        let mut buf = vec![0.0; self.n_years];
        let mut out = Vec::with_capacity(shares.len());
        for &w in shares {
            let mut comps = self.components.clone();
            for (k, s) in &candidate.series {
                let base = &self.totals[k.index()];
                for ((o, b), c) in buf.iter_mut().zip(base).zip(s) {
                    *o = b + w * c;
                }
                comps[k.index()] = scr_component_in_place(&mut buf, cfg.confidence)?;
            }
            out.push(aggregate_unchecked(&comps, corr));
        }
        Ok(out)
    }

    /// Change in diversified SCR from adding each share of the candidate.
    pub fn marginal_scr(
        &self,
        candidate: &KeyedLosses,
        shares: &[f64],
        cfg: &CapitalConfig,
        corr: &[Vec<f64>],
    ) -> Result<Vec<f64>, CapitalError> {
        let base = self.diversified_scr(corr);
        Ok(self
            .scr_with(candidate, shares, cfg, corr)?
            .into_iter()
            .map(|s| s - base)
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapitalState {
    pub components: BTreeMap<CapitalKey, Money>,
    pub diversified_scr: Money,
    pub own_funds: Money,
    pub solvency_ratio: f64,
    /// Own funds the treaty under negotiation may draw on.
    #[serde(default)]
    pub allocation_budget: Money,
    /// Change in diversified SCR by participation share, minor units.
    #[serde(default)]
    pub marginal_scr: ShareSchedule,
    /// Capital charged by share, minor units.
    #[serde(default)]
    pub charge: ShareSchedule,
}

impl CapitalState {
    pub fn from_book(book: &CapitalBook, corr: &[Vec<f64>], own_funds: Money) -> Self {
        let scr = book.diversified_scr(corr);
        CapitalState {
            components: CapitalKey::ALL
                .iter()
                .map(|k| (*k, Money::from_f64(book.components[k.index()])))
                .collect(),
            diversified_scr: Money::from_f64(scr),
            own_funds,
            solvency_ratio: solvency_ratio(own_funds.as_f64(), scr),
            ..Default::default()
        }
    }
}

/// Capital charged for a line: the largest marginal SCR at or below the
/// share (never negative) plus `min_charge_rate` per unit of capacity.
pub fn charge_schedule(
    marginal: &ShareSchedule,
    limit: Money,
    min_charge_rate: f64,
) -> ShareSchedule {
    let mut running = 0.0f64;
    let values = marginal
        .shares
        .iter()
        .zip(&marginal.values)
        .map(|(s, m)| {
            running = running.max(*m);
            running + min_charge_rate * s * limit.as_f64()
        })
        .collect();
    ShareSchedule::new(marginal.shares.clone(), values)
}
