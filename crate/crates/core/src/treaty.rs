//! Treaty structure shared by the generator, parsers, recovery engine and agents.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::money::Money;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Peril {
    Wind,
    Flood,
    Wildfire,
}

impl Peril {
    pub const ALL: [Peril; 3] = [Peril::Wind, Peril::Flood, Peril::Wildfire];

    pub fn index(self) -> usize {
        match self {
            Peril::Wind => 0,
            Peril::Flood => 1,
            Peril::Wildfire => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Peril::Wind => "Windstorm",
            Peril::Flood => "Flood",
            Peril::Wildfire => "Wildfire",
        }
    }
}

/// Physical cause attached to a ground-up loss. Storm surge is driven by
/// windstorm and is covered under the wind peril unless excluded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossCause {
    Wind,
    StormSurge,
    Flood,
    Wildfire,
}

impl LossCause {
    pub fn peril(self) -> Peril {
        match self {
            LossCause::Wind | LossCause::StormSurge => Peril::Wind,
            LossCause::Flood => Peril::Flood,
            LossCause::Wildfire => Peril::Wildfire,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineOfBusiness {
    PropertyCat,
    PropertyPerRisk,
    Casualty,
}

impl LineOfBusiness {
    pub const ALL: [LineOfBusiness; 3] = [
        LineOfBusiness::PropertyCat,
        LineOfBusiness::PropertyPerRisk,
        LineOfBusiness::Casualty,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionKind {
    StormSurge,
    Flood,
    Wildfire,
    Terror,
    Nuclear,
    CyberSilent,
}

impl ExclusionKind {
    pub const ALL: [ExclusionKind; 6] = [
        ExclusionKind::StormSurge,
        ExclusionKind::Flood,
        ExclusionKind::Wildfire,
        ExclusionKind::Terror,
        ExclusionKind::Nuclear,
        ExclusionKind::CyberSilent,
    ];

    /// Loss cause removed from cover by this exclusion, if any.
    pub fn excluded_cause(self) -> Option<LossCause> {
        match self {
            ExclusionKind::StormSurge => Some(LossCause::StormSurge),
            ExclusionKind::Flood => Some(LossCause::Flood),
            ExclusionKind::Wildfire => Some(LossCause::Wildfire),
            _ => None,
        }
    }

    /// The surge/flood pair is the boundary a reader can confuse.
    pub fn scope_partner(self) -> Option<ExclusionKind> {
        match self {
            ExclusionKind::StormSurge => Some(ExclusionKind::Flood),
            ExclusionKind::Flood => Some(ExclusionKind::StormSurge),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExclusionClause {
    pub kind: ExclusionKind,
    pub ambiguous_rendering: bool,
}

impl ExclusionClause {
    pub fn new(kind: ExclusionKind) -> Self {
        ExclusionClause {
            kind,
            ambiguous_rendering: false,
        }
    }

    pub fn ambiguous(kind: ExclusionKind) -> Self {
        ExclusionClause {
            kind,
            ambiguous_rendering: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u16);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z{:02}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreatyId(pub String);

impl fmt::Display for TreatyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub attachment: Money,
    pub limit: Money,
    pub reinstatements: u8,
    /// Reinstatement premium as a fraction of the pro-rata layer premium (1.0 = 100%).
    pub reinstatement_premium_pct: f64,
}

impl Layer {
    pub fn new(attachment: Money, limit: Money) -> Self {
        Layer {
            attachment,
            limit,
            reinstatements: 0,
            reinstatement_premium_pct: 1.0,
        }
    }
}

/// The structured content of a treaty: everything the wording encodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreatyTerms {
    pub id: TreatyId,
    pub line_of_business: LineOfBusiness,
    pub layers: Vec<Layer>,
    pub perils: BTreeSet<Peril>,
    /// Distinct kinds, sorted by kind.
    pub exclusions: Vec<ExclusionClause>,
    pub hours_clause: Option<u32>,
    pub zones: BTreeSet<ZoneId>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TermsError {
    #[error("treaty {0} has no layers")]
    NoLayers(String),
    #[error("treaty {id} layer {layer}: attachment and limit must be positive")]
    NonPositive { id: String, layer: usize },
    #[error("treaty {id} layer {layer} overlaps or is out of order")]
    Overlap { id: String, layer: usize },
    #[error("treaty {id}: reinstatement premium {pct} is not a whole percentage in [0, 10]")]
    ReinstatementPremium { id: String, pct: f64 },
    #[error("treaty {0}: exclusions must be sorted with distinct kinds")]
    Exclusions(String),
    #[error("treaty {0}: perils and zones must be non-empty")]
    EmptyCover(String),
    #[error("treaty {0}: hours clause must be positive")]
    Hours(String),
}

impl TreatyTerms {
    pub fn total_limit(&self) -> Money {
        self.layers.iter().map(|l| l.limit).sum()
    }

    pub fn first_layer(&self) -> Option<&Layer> {
        self.layers.first()
    }

    pub fn excludes(&self, kind: ExclusionKind) -> bool {
        self.exclusions.iter().any(|e| e.kind == kind)
    }

    /// Whether a ground-up loss with this cause falls within cover.
    pub fn covers(&self, cause: LossCause) -> bool {
        self.perils.contains(&cause.peril())
            && !self
                .exclusions
                .iter()
                .any(|e| e.kind.excluded_cause() == Some(cause))
    }

    pub fn is_multi_peril_wind_flood(&self) -> bool {
        self.perils.contains(&Peril::Wind) && self.perils.contains(&Peril::Flood)
    }

    /// Clause-level fields a reader can get wrong: attachment and limit per
    /// layer, each exclusion, and the hours clause when present.
    pub fn interpretation_field_count(&self) -> usize {
        2 * self.layers.len() + self.exclusions.len() + usize::from(self.hours_clause.is_some())
    }

    /// Number of this (ground-truth) treaty's fields that `parsed` misstates.
    pub fn interpretation_errors_against(&self, truth: &TreatyTerms) -> usize {
        let mut errors = 0;
        for (i, l) in truth.layers.iter().enumerate() {
            match self.layers.get(i) {
                Some(p) => {
                    errors += usize::from(p.attachment != l.attachment);
                    errors += usize::from(p.limit != l.limit);
                }
                None => errors += 2,
            }
        }
        errors += truth
            .exclusions
            .iter()
            .filter(|e| !self.excludes(e.kind))
            .count();
        if truth.hours_clause.is_some() && self.hours_clause != truth.hours_clause {
            errors += 1;
        }
        errors
    }

    pub fn validate(&self) -> Result<(), TermsError> {
        let id = || self.id.0.clone();
        if self.layers.is_empty() {
            return Err(TermsError::NoLayers(id()));
        }
        let mut prev_top: Option<Money> = None;
        for (i, l) in self.layers.iter().enumerate() {
            if l.attachment <= Money::ZERO || l.limit <= Money::ZERO {
                return Err(TermsError::NonPositive {
                    id: id(),
                    layer: i + 1,
                });
            }
            if let Some(top) = prev_top {
                if l.attachment < top {
                    return Err(TermsError::Overlap {
                        id: id(),
                        layer: i + 1,
                    });
                }
            }
            let pct = l.reinstatement_premium_pct * 100.0;
            if !(0.0..=1000.0).contains(&pct) || (pct - pct.round()).abs() > 1e-9 {
                return Err(TermsError::ReinstatementPremium {
                    id: id(),
                    pct: l.reinstatement_premium_pct,
                });
            }
            prev_top = Some(l.attachment + l.limit);
        }
        if self.exclusions.windows(2).any(|w| w[0].kind >= w[1].kind) {
            return Err(TermsError::Exclusions(id()));
        }
        if self.perils.is_empty() || self.zones.is_empty() {
            return Err(TermsError::EmptyCover(id()));
        }
        if self.hours_clause == Some(0) {
            return Err(TermsError::Hours(id()));
        }
        Ok(())
    }
}

/// A treaty: structured terms plus the wording rendered from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Treaty {
    #[serde(flatten)]
    pub terms: TreatyTerms,
    pub wording: String,
}

impl Treaty {
    pub fn id(&self) -> &TreatyId {
        &self.terms.id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms() -> TreatyTerms {
        TreatyTerms {
            id: TreatyId("TR-0001".into()),
            line_of_business: LineOfBusiness::PropertyCat,
            layers: vec![Layer::new(Money::millions(50), Money::millions(100))],
            perils: [Peril::Wind, Peril::Flood].into_iter().collect(),
            exclusions: vec![ExclusionClause::new(ExclusionKind::StormSurge)],
            hours_clause: Some(72),
            zones: [ZoneId(1)].into_iter().collect(),
        }
    }

    #[test]
    fn surge_exclusion_leaves_flood_covered() {
        let t = terms();
        assert!(!t.covers(LossCause::StormSurge));
        assert!(t.covers(LossCause::Flood));
        assert!(t.covers(LossCause::Wind));
        assert!(!t.covers(LossCause::Wildfire));
    }

    #[test]
    fn overlapping_layers_rejected() {
        let mut t = terms();
        t.layers
            .push(Layer::new(Money::millions(100), Money::millions(50)));
        assert!(matches!(t.validate(), Err(TermsError::Overlap { .. })));
        t.layers[1].attachment = Money::millions(150);
        assert!(t.validate().is_ok());
    }
}
