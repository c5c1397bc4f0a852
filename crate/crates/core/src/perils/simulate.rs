use std::io::{self, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    sample_occurrences, sort_by_time, CorrelationSpec, Drift, EventCatalog, HazardConfig,
    HazardError, TimedEvent, VulnerabilityCurve,
};
use crate::genesis::ExposureState;
use crate::linalg;
use crate::money::Money;
use crate::rng::stream;
use crate::treaty::{LineOfBusiness, LossCause, Peril, TreatyTerms, ZoneId};

/// Ground-up loss of one catalog event in one zone for one line and cause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneLoss {
    pub zone: ZoneId,
    pub line_of_business: LineOfBusiness,
    pub cause: LossCause,
    /// Minor units.
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    /// Index into `HazardState::event_losses`.
    pub event: u32,
    pub peril: Peril,
    pub hour: f64,
}

/// Simulated hazard outcome shared by every treaty of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardState {
    pub n_years: usize,
    pub zone_ids: Vec<ZoneId>,
    pub correlation: CorrelationSpec,
    pub drift: Drift,
    /// Global index of the first event of each peril's catalog, plus the total.
    pub event_offsets: [u32; 4],
    pub event_losses: Vec<Vec<ZoneLoss>>,
    pub occurrences: Vec<Occurrence>,
    year_start: Vec<u32>,
    /// `[year][peril][zone]` ground-up loss, capped at the zone's insured value.
    annual_zone_loss: Vec<f64>,
}

impl HazardState {
    pub fn year_occurrences(&self, year: usize) -> &[Occurrence] {
        let (a, b) = (
            self.year_start[year] as usize,
            self.year_start[year + 1] as usize,
        );
        &self.occurrences[a..b]
    }

    pub fn annual_zone_loss(&self, year: usize, peril: Peril, zone: usize) -> f64 {
        let nz = self.zone_ids.len();
        self.annual_zone_loss[(year * Peril::ALL.len() + peril.index()) * nz + zone]
    }

    /// Yearly ground-up total of one peril across zones.
    pub fn peril_annual_totals(&self, peril: Peril) -> Vec<f64> {
        let nz = self.zone_ids.len();
        (0..self.n_years)
            .map(|y| {
                let base = (y * Peril::ALL.len() + peril.index()) * nz;
                self.annual_zone_loss[base..base + nz].iter().sum()
            })
            .collect()
    }

    pub fn event_count(&self) -> usize {
        self.event_losses.len()
    }

    /// Per-event loss to a treaty's subject: its zones, its line, covered causes.
    pub fn subject_event_losses(&self, terms: &TreatyTerms) -> Vec<Money> {
        self.event_losses
            .iter()
            .map(|entries| {
                let total: f64 = entries
                    .iter()
                    .filter(|z| {
                        z.line_of_business == terms.line_of_business
                            && terms.zones.contains(&z.zone)
                            && terms.covers(z.cause)
                    })
                    .map(|z| z.loss)
                    .sum();
                Money::from_f64(total)
            })
            .collect()
    }

    /// CSV export: `year,peril,zone,loss` with loss in major units.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "year,peril,zone,loss")?;
        for y in 0..self.n_years {
            for p in Peril::ALL {
                for (zi, z) in self.zone_ids.iter().enumerate() {
                    let l = self.annual_zone_loss(y, p, zi);
                    if l > 0.0 {
                        writeln!(w, "{y},{},{z},{:.2}", p.name(), l / 100.0)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn lob_index(l: LineOfBusiness) -> usize {
    LineOfBusiness::ALL
        .iter()
        .position(|x| *x == l)
        .expect("closed enum")
}

fn event_loss_table(
    catalogs: &[EventCatalog],
    curves: &[VulnerabilityCurve; 3],
    exposures: &ExposureState,
    cfg: &HazardConfig,
) -> Vec<Vec<ZoneLoss>> {
    let nz = exposures.zones.len();
    let mut tiv = vec![[0.0f64; 3]; nz];
    for loc in &exposures.locations {
        if let Some(zi) = exposures.zone_index(loc.zone) {
            tiv[zi][lob_index(loc.line_of_business)] += loc.insured_value.as_f64();
        }
    }
    let mut table = Vec::new();
    for cat in catalogs {
        let curve = &curves[cat.peril.index()];
        for ev in &cat.events {
            let mut entries = Vec::new();
            for (zone, intensity) in &ev.footprint {
                let Some(zi) = exposures.zone_index(*zone) else {
                    continue;
                };
                let dr = curve.damage_ratio(*intensity);
                if dr <= 0.0 {
                    continue;
                }
                let coastal = exposures.zones[zi].coastal;
                for lob in LineOfBusiness::ALL {
                    let value = tiv[zi][lob_index(lob)];
                    if value <= 0.0 {
                        continue;
                    }
                    let scale = if lob == LineOfBusiness::Casualty {
                        cfg.casualty_damage_scale
                    } else {
                        1.0
                    };
                    let loss = value * dr * scale;
                    let mut push = |cause, loss: f64| {
                        if loss > 0.0 {
                            entries.push(ZoneLoss {
                                zone: *zone,
                                line_of_business: lob,
                                cause,
                                loss,
                            });
                        }
                    };
                    match cat.peril {
                        Peril::Wind if coastal => {
                            push(LossCause::Wind, loss * (1.0 - cfg.surge_share));
                            push(LossCause::StormSurge, loss * cfg.surge_share);
                        }
                        Peril::Wind => push(LossCause::Wind, loss),
                        Peril::Flood => push(LossCause::Flood, loss),
                        Peril::Wildfire => push(LossCause::Wildfire, loss),
                    }
                }
            }
            table.push(entries);
        }
    }
    table
}

/// Annual occurrences for every peril, with a Gaussian copula over lognormal
/// per-peril frequency multipliers `exp(sigma z - sigma^2 / 2)`.
pub fn simulate_annual_losses(
    catalogs: &[EventCatalog],
    cfg: &HazardConfig,
    exposures: &ExposureState,
    corr: &CorrelationSpec,
    seed: u64,
) -> Result<HazardState, HazardError> {
    cfg.validate()?;
    corr.validate()?;
    let curves = cfg.curves()?;
    let mut by_peril: Vec<Option<&EventCatalog>> = vec![None; Peril::ALL.len()];
    for c in catalogs {
        by_peril[c.peril.index()] = Some(c);
    }
    let mut ordered = Vec::with_capacity(3);
    for (i, c) in by_peril.iter().enumerate() {
        match c {
            Some(c) => ordered.push((*c).clone()),
            None => {
                return Err(HazardError::Config(format!(
                    "no catalog for {}",
                    Peril::ALL[i].name()
                )))
            }
        }
    }
    let chol = linalg::cholesky_psd(&corr.matrix)?;
    let mut event_offsets = [0u32; 4];
    for (i, c) in ordered.iter().enumerate() {
        event_offsets[i + 1] = event_offsets[i] + c.events.len() as u32;
    }
    let event_losses = event_loss_table(&ordered, &curves, exposures, cfg);
    let event_zone_totals: Vec<Vec<(usize, f64)>> = event_losses
        .iter()
        .map(|entries| {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for e in entries {
                let zi = exposures.zone_index(e.zone).expect("zone exists");
                match acc.iter_mut().find(|(z, _)| *z == zi) {
                    Some(slot) => slot.1 += e.loss,
                    None => acc.push((zi, e.loss)),
                }
            }
            acc
        })
        .collect();

    let nz = exposures.zones.len();
    let zone_tiv: Vec<f64> = exposures.zone_tiv().iter().map(|m| m.as_f64()).collect();
    let sigma = cfg.frequency_sigma;
    let n_years = cfg.n_years;
    let mut occurrences = Vec::new();
    let mut year_start = Vec::with_capacity(n_years + 1);
    let mut annual = vec![0.0f64; n_years * Peril::ALL.len() * nz];
    let mut buf: Vec<TimedEvent> = Vec::new();
    let mut year_occ: Vec<Occurrence> = Vec::new();

    for y in 0..n_years {
        let mut rng = stream(seed, "perils.year", y as u64);
        let g: [f64; 3] = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        year_occ.clear();
        for (pi, cat) in ordered.iter().enumerate() {
            let z: f64 = (0..=pi).map(|k| chol[pi][k] * g[k]).sum();
            let multiplier = (sigma * z - 0.5 * sigma * sigma).exp();
            buf.clear();
            sample_occurrences(cat, multiplier, &mut rng, &mut buf);
            for te in &buf {
                let global = event_offsets[pi] + te.event;
                year_occ.push(Occurrence {
                    event: global,
                    peril: cat.peril,
                    hour: te.hour,
                });
                let base = (y * Peril::ALL.len() + pi) * nz;
                for (zi, loss) in &event_zone_totals[global as usize] {
                    annual[base + zi] += loss;
                }
            }
        }
        for pi in 0..Peril::ALL.len() {
            let base = (y * Peril::ALL.len() + pi) * nz;
            for zi in 0..nz {
                annual[base + zi] = annual[base + zi].min(zone_tiv[zi]);
            }
        }
        let mut timed: Vec<TimedEvent> = year_occ
            .iter()
            .map(|o| TimedEvent {
                event: o.event,
                hour: o.hour,
            })
            .collect();
        sort_by_time(&mut timed);
        year_start.push(occurrences.len() as u32);
        for t in timed {
            let peril = Peril::ALL[(1..4)
                .find(|i| t.event < event_offsets[*i])
                .expect("in range")
                - 1];
            occurrences.push(Occurrence {
                event: t.event,
                peril,
                hour: t.hour,
            });
        }
    }
    year_start.push(occurrences.len() as u32);

    Ok(HazardState {
        n_years,
        zone_ids: exposures.zones.iter().map(|z| z.id).collect(),
        correlation: corr.clone(),
        drift: cfg.drift,
        event_offsets,
        event_losses,
        occurrences,
        year_start,
        annual_zone_loss: annual,
    })
}
