//! Hazard: per-peril event catalogs with zone footprints, vulnerability
//! curves, frequency drift, and correlated annual occurrence sampling.

mod simulate;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::genesis::{LogNormalSpec, Zone};
use crate::linalg::{self, MatrixError};
use crate::rng::{stream, SimRng};
use crate::treaty::{Peril, ZoneId};

pub use simulate::{simulate_annual_losses, HazardState, Occurrence, ZoneLoss};

pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HazardError {
    #[error("hazard configuration: {0}")]
    Config(String),
    #[error("correlation matrix: {0}")]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEvent {
    pub id: u32,
    pub annual_rate: f64,
    /// Unitless severity index per affected zone.
    pub footprint: BTreeMap<ZoneId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCatalog {
    pub peril: Peril,
    pub events: Vec<CatalogEvent>,
}

impl EventCatalog {
    pub fn new(peril: Peril, events: Vec<CatalogEvent>) -> Result<Self, HazardError> {
        if events.is_empty() {
            return Err(HazardError::Config(format!(
                "{} catalog has no events",
                peril.name()
            )));
        }
        for e in &events {
            if !(e.annual_rate > 0.0 && e.annual_rate.is_finite()) {
                return Err(HazardError::Config(format!(
                    "event {} has non-positive rate",
                    e.id
                )));
            }
            if e.footprint.is_empty() {
                return Err(HazardError::Config(format!(
                    "event {} has an empty footprint",
                    e.id
                )));
            }
            if e.footprint.values().any(|i| !(*i >= 0.0 && i.is_finite())) {
                return Err(HazardError::Config(format!(
                    "event {} has a negative intensity",
                    e.id
                )));
            }
        }
        Ok(EventCatalog { peril, events })
    }

    pub fn total_rate(&self) -> f64 {
        self.events.iter().map(|e| e.annual_rate).sum()
    }
}

/// Where epicentres tend to fall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Coastal,
    Anywhere,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogConfig {
    pub n_events: usize,
    pub total_rate: f64,
    /// Lognormal dispersion of per-event rates before normalisation to `total_rate`.
    pub rate_sigma: f64,
    /// Epicentre intensity.
    pub severity: LogNormalSpec,
    /// Footprint radius in plane units; intensity decays linearly to zero at the radius.
    pub radius: f64,
    pub region: Region,
}

fn region_weight(region: Region, zone: &Zone) -> f64 {
    match region {
        Region::Anywhere => 1.0,
        Region::Coastal => {
            if zone.coastal {
                5.0
            } else {
                0.3
            }
        }
        Region::Interior => {
            if zone.center.0 > 60.0 {
                4.0
            } else {
                0.5
            }
        }
    }
}

pub fn build_event_catalog(
    peril: Peril,
    zones: &[Zone],
    cfg: &CatalogConfig,
    seed: u64,
) -> Result<EventCatalog, HazardError> {
    if zones.is_empty() {
        return Err(HazardError::Config(
            "catalog needs at least one zone".into(),
        ));
    }
    if cfg.n_events == 0 {
        return Err(HazardError::Config(format!(
            "{} catalog configured with zero events",
            peril.name()
        )));
    }
    if !(cfg.total_rate > 0.0) || !(cfg.rate_sigma >= 0.0) || !(cfg.radius >= 0.0) {
        return Err(HazardError::Config(format!(
            "{} catalog needs total_rate > 0, rate_sigma >= 0 and radius >= 0",
            peril.name()
        )));
    }
    let sev = LogNormal::new(cfg.severity.mu, cfg.severity.sigma)
        .map_err(|e| HazardError::Config(format!("severity: {e}")))?;
    let spread = LogNormal::new(0.0, cfg.rate_sigma)
        .map_err(|e| HazardError::Config(format!("rate_sigma: {e}")))?;
    let mut rng = stream(seed, "perils.catalog", peril.index() as u64);
    let weights: Vec<f64> = zones.iter().map(|z| region_weight(cfg.region, z)).collect();
    let total_w: f64 = weights.iter().sum();

    let mut raw_rates = Vec::with_capacity(cfg.n_events);
    let mut events = Vec::with_capacity(cfg.n_events);
    for id in 0..cfg.n_events {
        let mut u = rng.random::<f64>() * total_w;
        let mut epi = zones.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                epi = i;
                break;
            }
            u -= w;
        }
        let severity: f64 = sev.sample(&mut rng);
        let c = zones[epi].center;
        let mut footprint = BTreeMap::new();
        for (i, z) in zones.iter().enumerate() {
            let intensity = if i == epi {
                severity
            } else {
                let d = (z.center.0 - c.0).hypot(z.center.1 - c.1);
                if d >= cfg.radius {
                    continue;
                }
                severity * (1.0 - d / cfg.radius)
            };
            footprint.insert(z.id, intensity);
        }
        raw_rates.push(spread.sample(&mut rng));
        events.push(CatalogEvent {
            id: id as u32,
            annual_rate: 0.0,
            footprint,
        });
    }
    let raw_total: f64 = raw_rates.iter().sum();
    for (e, r) in events.iter_mut().zip(raw_rates) {
        e.annual_rate = cfg.total_rate * r / raw_total;
    }
    EventCatalog::new(peril, events)
}

/// Rates for simulation year `year` under a multiplicative annual trend.
pub fn apply_drift(
    catalog: &EventCatalog,
    factor: f64,
    year: u32,
) -> Result<EventCatalog, HazardError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(HazardError::Config(format!(
            "drift factor {factor} must be positive"
        )));
    }
    let scale = factor.powi(year as i32);
    let mut out = catalog.clone();
    for e in &mut out.events {
        e.annual_rate *= scale;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityCurve {
    pub peril: Peril,
    /// (intensity, damage ratio), strictly increasing in intensity.
    pub points: Vec<(f64, f64)>,
}

impl VulnerabilityCurve {
    pub fn new(peril: Peril, points: Vec<(f64, f64)>) -> Result<Self, HazardError> {
        let bad = |m: &str| {
            Err(HazardError::Config(format!(
                "{} vulnerability curve: {m}",
                peril.name()
            )))
        };
        if points.first() != Some(&(0.0, 0.0)) {
            return bad("must start at (0, 0)");
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                return bad("must be increasing in intensity and non-decreasing in damage");
            }
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
            return bad("damage ratios must lie in [0, 1]");
        }
        Ok(VulnerabilityCurve { peril, points })
    }

    /// Piecewise-linear; flat beyond the last control point.
    pub fn damage_ratio(&self, intensity: f64) -> f64 {
        if intensity <= 0.0 {
            return 0.0;
        }
        let pts = &self.points;
        let k = pts.partition_point(|p| p.0 <= intensity);
        if k >= pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (x0, y0) = pts[k - 1];
        let (x1, y1) = pts[k];
        y0 + (y1 - y0) * (intensity - x0) / (x1 - x0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationPreset {
    Low,
    Medium,
    High,
}

impl CorrelationPreset {
    pub const ALL: [CorrelationPreset; 3] = [
        CorrelationPreset::Low,
        CorrelationPreset::Medium,
        CorrelationPreset::High,
    ];

    pub fn off_diagonal(self) -> f64 {
        match self {
            CorrelationPreset::Low => 0.1,
            CorrelationPreset::Medium => 0.3,
            CorrelationPreset::High => 0.6,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CorrelationPreset::Low => "low",
            CorrelationPreset::Medium => "medium",
            CorrelationPreset::High => "high",
        }
    }
}

/// Cross-peril dependence, indexed by `Peril::index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub preset: Option<CorrelationPreset>,
    pub matrix: Vec<Vec<f64>>,
}

impl CorrelationSpec {
    pub fn preset(p: CorrelationPreset) -> Self {
        CorrelationSpec {
            preset: Some(p),
            matrix: linalg::equicorrelation(Peril::ALL.len(), p.off_diagonal()),
        }
    }

    pub fn independent() -> Self {
        CorrelationSpec {
            preset: None,
            matrix: linalg::equicorrelation(Peril::ALL.len(), 0.0),
        }
    }

    /// Checked at load: symmetric, unit diagonal, PSD.
    pub fn custom(matrix: Vec<Vec<f64>>) -> Result<Self, HazardError> {
        let spec = CorrelationSpec {
            preset: None,
            matrix,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HazardError> {
        if self.matrix.len() != Peril::ALL.len() {
            return Err(MatrixError::Dimension {
                expected: Peril::ALL.len(),
                got: self.matrix.len(),
            }
            .into());
        }
        linalg::validate_correlation(&self.matrix)?;
        linalg::cholesky_psd(&self.matrix)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    /// Multiplicative change in event frequency per year.
    pub factor: f64,
    /// Projection year the simulated annual losses represent.
    pub horizon: u32,
}

impl Default for Drift {
    fn default() -> Self {
        Drift {
            factor: 1.0,
            horizon: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardConfig {
    pub wind: CatalogConfig,
    pub flood: CatalogConfig,
    pub wildfire: CatalogConfig,
    pub wind_curve: Vec<(f64, f64)>,
    pub flood_curve: Vec<(f64, f64)>,
    pub wildfire_curve: Vec<(f64, f64)>,
    /// Part of windstorm damage in coastal zones attributed to storm surge.
    pub surge_share: f64,
    /// Damage scale for casualty exposures relative to property.
    pub casualty_damage_scale: f64,
    /// Dispersion of the lognormal annual frequency multiplier per peril.
    pub frequency_sigma: f64,
    pub drift: Drift,
    pub n_years: usize,
}

impl Default for HazardConfig {
    fn default() -> Self {
        let ln = |median: f64, sigma: f64| LogNormalSpec {
            mu: median.ln(),
            sigma,
        };
        HazardConfig {
            wind: CatalogConfig {
                n_events: 160,
                total_rate: 1.2,
                rate_sigma: 0.8,
                severity: ln(0.9, 0.45),
                radius: 25.0,
                region: Region::Coastal,
            },
            flood: CatalogConfig {
                n_events: 120,
                total_rate: 1.0,
                rate_sigma: 0.8,
                severity: ln(0.9, 0.45),
                radius: 16.0,
                region: Region::Anywhere,
            },
            wildfire: CatalogConfig {
                n_events: 100,
                total_rate: 0.8,
                rate_sigma: 0.8,
                severity: ln(0.9, 0.45),
                radius: 14.0,
                region: Region::Interior,
            },
            wind_curve: vec![
                (0.0, 0.0),
                (0.5, 0.004),
                (1.0, 0.025),
                (1.5, 0.07),
                (2.0, 0.15),
                (3.0, 0.35),
                (5.0, 0.7),
            ],
            flood_curve: vec![
                (0.0, 0.0),
                (0.5, 0.01),
                (1.0, 0.04),
                (1.5, 0.09),
                (2.0, 0.17),
                (3.0, 0.35),
                (5.0, 0.6),
            ],
            wildfire_curve: vec![
                (0.0, 0.0),
                (0.5, 0.005),
                (1.0, 0.03),
                (1.5, 0.1),
                (2.0, 0.22),
                (3.0, 0.5),
                (5.0, 0.85),
            ],
            surge_share: 0.35,
            casualty_damage_scale: 0.35,
            frequency_sigma: 0.5,
            drift: Drift::default(),
            n_years: 10_000,
        }
    }
}

impl HazardConfig {
    pub fn catalog_config(&self, peril: Peril) -> &CatalogConfig {
        match peril {
            Peril::Wind => &self.wind,
            Peril::Flood => &self.flood,
            Peril::Wildfire => &self.wildfire,
        }
    }

    pub fn validate(&self) -> Result<(), HazardError> {
        if self.n_years == 0 {
            return Err(HazardError::Config("n_years must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.surge_share)
            || !(0.0..=1.0).contains(&self.casualty_damage_scale)
        {
            return Err(HazardError::Config(
                "surge_share and casualty_damage_scale must lie in [0, 1]".into(),
            ));
        }
        if !(self.frequency_sigma >= 0.0 && self.frequency_sigma.is_finite()) {
            return Err(HazardError::Config(
                "frequency_sigma must be finite and >= 0".into(),
            ));
        }
        if !(self.drift.factor > 0.0) {
            return Err(HazardError::Config("drift factor must be positive".into()));
        }
        self.curves()?;
        Ok(())
    }

    pub fn curves(&self) -> Result<[VulnerabilityCurve; 3], HazardError> {
        Ok([
            VulnerabilityCurve::new(Peril::Wind, self.wind_curve.clone())?,
            VulnerabilityCurve::new(Peril::Flood, self.flood_curve.clone())?,
            VulnerabilityCurve::new(Peril::Wildfire, self.wildfire_curve.clone())?,
        ])
    }

    /// All three catalogs, drifted to the configured horizon.
    pub fn build_catalogs(
        &self,
        zones: &[Zone],
        seed: u64,
    ) -> Result<Vec<EventCatalog>, HazardError> {
        Peril::ALL
            .iter()
            .map(|p| {
                let c = build_event_catalog(*p, zones, self.catalog_config(*p), seed)?;
                apply_drift(&c, self.drift.factor, self.drift.horizon)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub event: u32,
    /// Hours from the start of the year.
    pub hour: f64,
}

/// Poisson-thinned occurrences with at most one occurrence per catalog event.
pub(crate) fn sample_occurrences(
    catalog: &EventCatalog,
    rate_scale: f64,
    rng: &mut SimRng,
    out: &mut Vec<TimedEvent>,
) {
    for e in &catalog.events {
        let p = 1.0 - (-e.annual_rate * rate_scale).exp();
        let u: f64 = rng.random();
        if u < p {
            out.push(TimedEvent {
                event: e.id,
                hour: rng.random::<f64>() * HOURS_PER_YEAR,
            });
        }
    }
}

pub(crate) fn sort_by_time(events: &mut [TimedEvent]) {
    events.sort_by(|a, b| a.hour.total_cmp(&b.hour).then(a.event.cmp(&b.event)));
}

/// Occurrences of one catalog in one year, time-ordered.
pub fn event_sequence(catalog: &EventCatalog, year: u32, seed: u64) -> Vec<TimedEvent> {
    let mut rng = stream(
        seed,
        "perils.sequence",
        (u64::from(year) << 2) | catalog.peril.index() as u64,
    );
    let mut out = Vec::new();
    sample_occurrences(catalog, 1.0, &mut rng, &mut out);
    sort_by_time(&mut out);
    out
}
