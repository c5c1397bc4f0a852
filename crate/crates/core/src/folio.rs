//! Portfolio engine: layer and treaty recoveries (hours clause, exclusions,
//! reinstatements), retrocession, zone accumulation and tail VaR.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::stats;
use crate::treaty::{Layer, LossCause, Peril, TreatyTerms, ZoneId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FolioError {
    #[error("event sequence is not time-ordered at index {0}")]
    Unordered(usize),
    #[error("empty loss sample")]
    EmptySample,
    #[error("invalid retro structure: {0}")]
    InvalidRetro(String),
    #[error("negative loss at index {0}")]
    NegativeLoss(usize),
}

pub fn layer_recovery(loss: Money, attachment: Money, limit: Money) -> Money {
    (loss - attachment).clamp_non_negative().min(limit)
}

/// A ground-up loss to the cedant's subject, tagged by cause. Entries sharing
/// an `event` id are parts of one physical event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimEvent {
    pub event: u32,
    /// Hours from the start of the year.
    pub hour: f64,
    pub cause: LossCause,
    pub loss: Money,
}

/// A covered loss already attributed to a peril.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectLoss {
    pub hour: f64,
    pub peril: Peril,
    pub loss: Money,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerOutcome {
    pub ceded: Money,
    /// Limit reinstated, which carries reinstatement premium.
    pub reinstated: Money,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnualRecovery {
    pub ceded: Money,
    pub layers: Vec<LayerOutcome>,
    /// Recovery per occurrence, in occurrence order.
    pub occurrence_ceded: Vec<Money>,
    pub occurrence_perils: Vec<Peril>,
}

impl AnnualRecovery {
    /// Additional premium owed for reinstated limit at the given rate on line.
    pub fn reinstatement_premium(&self, layers: &[Layer], rate_on_line: f64) -> Money {
        self.layers
            .iter()
            .zip(layers)
            .map(|(o, l)| {
                o.reinstated
                    .scale(l.reinstatement_premium_pct * rate_on_line)
            })
            .sum()
    }
}

/// Greedy first-event-anchored grouping per peril: each occurrence collects the
/// anchor and every later event of the same peril within `hours` of it.
/// Input must be time-ordered. Returns (anchor hour, peril, loss) per occurrence,
/// ordered by anchor time.
pub fn group_occurrences(events: &[SubjectLoss], hours: Option<u32>) -> Vec<(f64, Peril, Money)> {
    let mut out: Vec<(f64, Peril, Money)> = Vec::new();
    let mut open: [Option<usize>; 3] = [None; 3];
    for e in events {
        let slot = e.peril.index();
        let joined = match (hours, open[slot]) {
            (Some(h), Some(i)) if e.hour - out[i].0 <= f64::from(h) => {
                out[i].2 += e.loss;
                true
            }
            _ => false,
        };
        if !joined {
            open[slot] = Some(out.len());
            out.push((e.hour, e.peril, e.loss));
        }
    }
    out
}

/// Applies layers with reinstatements to occurrence losses in order.
pub fn apply_layers(occurrences: &[Money], layers: &[Layer]) -> AnnualRecovery {
    let mut rec = AnnualRecovery {
        layers: vec![LayerOutcome::default(); layers.len()],
        occurrence_ceded: Vec::with_capacity(occurrences.len()),
        occurrence_perils: Vec::new(),
        ceded: Money::ZERO,
    };
    let mut remaining: Vec<Money> = layers
        .iter()
        .map(|l| Money(l.limit.0 * (1 + i64::from(l.reinstatements))))
        .collect();
    let mut reinstatable: Vec<Money> = layers
        .iter()
        .map(|l| Money(l.limit.0 * i64::from(l.reinstatements)))
        .collect();
    for loss in occurrences {
        let mut occ = Money::ZERO;
        for (i, l) in layers.iter().enumerate() {
            let r = layer_recovery(*loss, l.attachment, l.limit).min(remaining[i]);
            remaining[i] -= r;
            let reinstated = r.min(reinstatable[i]);
            reinstatable[i] -= reinstated;
            rec.layers[i].ceded += r;
            rec.layers[i].reinstated += reinstated;
            occ += r;
        }
        rec.occurrence_ceded.push(occ);
        rec.ceded += occ;
    }
    rec
}

/// Recovery from pre-filtered covered losses.
pub fn recover_subject_losses(
    events: &[SubjectLoss],
    terms: &TreatyTerms,
) -> Result<AnnualRecovery, FolioError> {
    for (i, w) in events.windows(2).enumerate() {
        if w[1].hour < w[0].hour {
            return Err(FolioError::Unordered(i + 1));
        }
    }
    if let Some(i) = events.iter().position(|e| e.loss < Money::ZERO) {
        return Err(FolioError::NegativeLoss(i));
    }
    let grouped = group_occurrences(events, terms.hours_clause);
    let occ: Vec<Money> = grouped.iter().map(|(_, _, l)| *l).collect();
    let mut rec = apply_layers(&occ, &terms.layers);
    rec.occurrence_perils = grouped.iter().map(|(_, p, _)| *p).collect();
    Ok(rec)
}

/// Annual recovery under a treaty. Excluded or uncovered causes contribute
/// nothing; entries of one event are merged before grouping.
pub fn treaty_recovery(
    events: &[ClaimEvent],
    terms: &TreatyTerms,
) -> Result<AnnualRecovery, FolioError> {
    for (i, w) in events.windows(2).enumerate() {
        if w[1].hour < w[0].hour {
            return Err(FolioError::Unordered(i + 1));
        }
    }
    let mut subject: Vec<(u32, SubjectLoss)> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.loss < Money::ZERO {
            return Err(FolioError::NegativeLoss(i));
        }
        if !terms.covers(e.cause) {
            continue;
        }
        let peril = e.cause.peril();
        match subject
            .iter_mut()
            .find(|(id, s)| *id == e.event && s.peril == peril)
        {
            Some((_, s)) => s.loss += e.loss,
            None => subject.push((
                e.event,
                SubjectLoss {
                    hour: e.hour,
                    peril,
                    loss: e.loss,
                },
            )),
        }
    }
    let flat: Vec<SubjectLoss> = subject.into_iter().map(|(_, s)| s).collect();
    recover_subject_losses(&flat, terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetroStructure {
    QuotaShare { cession: f64 },
    ExcessOfLoss { attachment: Money, limit: Money },
    AggregateXl { attachment: Money, limit: Money },
}

impl RetroStructure {
    pub fn validate(&self) -> Result<(), FolioError> {
        match *self {
            RetroStructure::QuotaShare { cession } if !(0.0..=1.0).contains(&cession) => Err(
                FolioError::InvalidRetro(format!("cession {cession} outside [0, 1]")),
            ),
            RetroStructure::ExcessOfLoss { attachment, limit }
            | RetroStructure::AggregateXl { attachment, limit }
                if attachment <= Money::ZERO || limit <= Money::ZERO =>
            {
                Err(FolioError::InvalidRetro(
                    "attachment and limit must be positive".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetroOutcome {
    pub gross: Money,
    pub retained: Money,
    pub recovered: Money,
}

/// Splits one year's assumed occurrence losses between retained and retro-recovered.
/// `retained + recovered == gross` holds exactly.
pub fn apply_retro(
    occurrences: &[Money],
    structure: &RetroStructure,
) -> Result<RetroOutcome, FolioError> {
    structure.validate()?;
    if let Some(i) = occurrences.iter().position(|l| *l < Money::ZERO) {
        return Err(FolioError::NegativeLoss(i));
    }
    let gross: Money = occurrences.iter().copied().sum();
    let recovered = match *structure {
        RetroStructure::QuotaShare { cession } => {
            occurrences.iter().map(|l| l.scale(cession).min(*l)).sum()
        }
        RetroStructure::ExcessOfLoss { attachment, limit } => occurrences
            .iter()
            .map(|l| layer_recovery(*l, attachment, limit))
            .sum(),
        RetroStructure::AggregateXl { attachment, limit } => {
            layer_recovery(gross, attachment, limit)
        }
    };
    Ok(RetroOutcome {
        gross,
        retained: gross - recovered,
        recovered,
    })
}

/// Each treaty's total limit attributed in full to every zone it covers.
pub fn zone_accumulation<'a, I>(treaties: I) -> BTreeMap<ZoneId, Money>
where
    I: IntoIterator<Item = &'a TreatyTerms>,
{
    let mut acc = BTreeMap::new();
    for t in treaties {
        let limit = t.total_limit();
        for z in &t.zones {
            *acc.entry(*z).or_insert(Money::ZERO) += limit;
        }
    }
    acc
}

pub const DEFAULT_TAIL_LEVEL: f64 = 0.99;

/// Empirical quantile of annual aggregate portfolio losses.
pub fn tail_var(annual: &[f64], level: f64) -> Result<f64, FolioError> {
    stats::quantile(annual, level).map_err(|_| FolioError::EmptySample)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub zone_accumulation: BTreeMap<ZoneId, Money>,
    /// Minor units, at `tail_level`.
    pub tail_var: f64,
    pub tail_level: f64,
    /// Accumulation as a fraction of the zone appetite.
    pub capacity_used: BTreeMap<ZoneId, f64>,
    pub zone_appetite: Money,
    pub tail_var_appetite: f64,
    /// Tail VaR of the book plus each share of the treaty under negotiation.
    #[serde(default)]
    pub tail_var_with: crate::stats::ShareSchedule,
}


/// A treaty's simulated annual results on a hazard sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatyLosses {
    /// Ceded per simulated year, minor units.
    pub annual: Vec<f64>,
    pub keyed: crate::capital::KeyedLosses,
}

impl TreatyLosses {
    pub fn expected(&self) -> f64 {
        stats::mean(&self.annual).unwrap_or(0.0)
    }

    pub fn sd(&self) -> f64 {
        if self.annual.len() > 1 {
            stats::std_dev(&self.annual).unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

/// Runs the treaty over every simulated year of `hazard`.
pub fn simulate_treaty(hazard: &crate::perils::HazardState, terms: &TreatyTerms) -> TreatyLosses {
    use crate::capital::{CapitalKey, KeyedLosses};
    let subject = hazard.subject_event_losses(terms);
    let mut annual = vec![0.0; hazard.n_years];
    let mut keyed = KeyedLosses::new(hazard.n_years);
    if subject.iter().all(|l| *l == Money::ZERO) {
        return TreatyLosses { annual, keyed };
    }
    let mut events = Vec::new();
    for (y, slot) in annual.iter_mut().enumerate() {
        events.clear();
        for o in hazard.year_occurrences(y) {
            let loss = subject[o.event as usize];
            if loss > Money::ZERO {
                events.push(SubjectLoss {
                    hour: o.hour,
                    peril: o.peril,
                    loss,
                });
            }
        }
        if events.is_empty() {
            continue;
        }
        let rec = recover_subject_losses(&events, terms).expect("occurrences are time-ordered");
        if rec.ceded == Money::ZERO {
            continue;
        }
        *slot = rec.ceded.as_f64();
        for (c, p) in rec.occurrence_ceded.iter().zip(&rec.occurrence_perils) {
            if *c > Money::ZERO {
                keyed.add(
                    CapitalKey::for_loss(terms.line_of_business, *p),
                    y,
                    c.as_f64(),
                );
            }
        }
    }
    TreatyLosses { annual, keyed }
}
