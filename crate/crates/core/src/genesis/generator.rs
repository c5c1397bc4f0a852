use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, Poisson};

use super::{ExposureState, GeneratorConfig, GenesisError, Location, Portfolio, Zone};
use crate::genesis::wording::render_wording;
use crate::money::Money;
use crate::rng::{stream, SimRng};
use crate::treaty::{
    ExclusionClause, ExclusionKind, Layer, LineOfBusiness, Peril, Treaty, TreatyId, TreatyTerms,
    ZoneId,
};

/// Amounts are rounded to this grid so wordings read like real schedules.
pub const AMOUNT_GRID: Money = Money::from_major(10_000);

const PLANE: f64 = 100.0;
const COAST_X: f64 = 25.0;
const ZONE_SPREAD: f64 = 1.5;

/// Lays zones out on a near-square grid over a 100 x 100 plane; the coast is
/// the strip x < 25.
fn layout_zones(count: usize) -> Vec<Zone> {
    let cols = ((count as f64 * 1.6).sqrt().ceil() as usize).max(1);
    let rows = count.div_ceil(cols);
    let dx = PLANE / cols as f64;
    let dy = PLANE / rows as f64;
    (0..count)
        .map(|i| {
            let (c, r) = (i % cols, i / cols);
            let center = (dx * (c as f64 + 0.5), dy * (r as f64 + 0.5));
            Zone {
                id: ZoneId(i as u16 + 1),
                center,
                coastal: center.0 < COAST_X,
            }
        })
        .collect()
}

fn lob_for_location(u: f64) -> LineOfBusiness {
    if u < 0.6 {
        LineOfBusiness::PropertyCat
    } else if u < 0.85 {
        LineOfBusiness::PropertyPerRisk
    } else {
        LineOfBusiness::Casualty
    }
}

fn generate_exposures(cfg: &GeneratorConfig) -> Result<ExposureState, GenesisError> {
    let zones = layout_zones(cfg.zone_count);
    let mut rng = stream(cfg.seed, "genesis.exposure", 0);
    let spec = cfg.exposures_per_zone;
    let gamma = Gamma::new(spec.dispersion, spec.mean / spec.dispersion)
        .map_err(|e| GenesisError::Config(format!("exposures_per_zone: {e}")))?;
    let iv = cfg.insured_value_distribution;
    let iv_dist = LogNormal::new(iv.mu, iv.sigma)
        .map_err(|e| GenesisError::Config(format!("insured_value_distribution: {e}")))?;
    let jitter = Normal::new(0.0, ZONE_SPREAD).expect("constant sd");
    let mut locations = Vec::new();
    for zone in &zones {
        let lambda: f64 = gamma.sample(&mut rng).max(1e-9);
        let n = Poisson::new(lambda)
            .map(|p| p.sample(&mut rng) as usize)
            .unwrap_or(0)
            .max(1);
        for _ in 0..n {
            let coordinates = (
                zone.center.0 + jitter.sample(&mut rng),
                zone.center.1 + jitter.sample(&mut rng),
            );
            let value: f64 = iv_dist.sample(&mut rng);
            let insured_value = Money::from_major(value.round().max(1.0) as i64);
            let line_of_business = lob_for_location(rng.random());
            locations.push(Location {
                zone: zone.id,
                coordinates,
                insured_value,
                line_of_business,
            });
        }
    }
    Ok(ExposureState { zones, locations })
}

/// Treaty class and peril mix, assigned by exact quota and shuffled.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Profile {
    MultiPeril,
    CatSingle,
    PerRisk,
    Casualty,
}

fn profiles(cfg: &GeneratorConfig, rng: &mut SimRng) -> Vec<Profile> {
    let n = cfg.n_treaties;
    let n_cat = ((cfg.property_cat_share * n as f64).round() as usize).min(n);
    let n_multi = ((cfg.multi_peril_share * n as f64).round() as usize).min(n_cat);
    let n_rest = n - n_cat;
    let n_per_risk = (n_rest as f64 * 0.6).round() as usize;
    let mut out = Vec::with_capacity(n);
    out.extend(std::iter::repeat_n(Profile::MultiPeril, n_multi));
    out.extend(std::iter::repeat_n(Profile::CatSingle, n_cat - n_multi));
    out.extend(std::iter::repeat_n(Profile::PerRisk, n_per_risk));
    out.extend(std::iter::repeat_n(Profile::Casualty, n_rest - n_per_risk));
    out.shuffle(rng);
    out
}

fn pick_perils(profile: Profile, rng: &mut SimRng) -> (LineOfBusiness, BTreeSet<Peril>) {
    let u: f64 = rng.random();
    let (lob, perils): (LineOfBusiness, &[Peril]) = match profile {
        Profile::MultiPeril => (LineOfBusiness::PropertyCat, &[Peril::Wind, Peril::Flood]),
        Profile::CatSingle => {
            let p: &[Peril] = if u < 0.45 {
                &[Peril::Wind]
            } else if u < 0.65 {
                &[Peril::Flood]
            } else if u < 0.9 {
                &[Peril::Wildfire]
            } else {
                &[Peril::Wind, Peril::Wildfire]
            };
            (LineOfBusiness::PropertyCat, p)
        }
        Profile::PerRisk => {
            let p: &[Peril] = if u < 0.5 {
                &[Peril::Wind]
            } else {
                &[Peril::Wildfire]
            };
            (LineOfBusiness::PropertyPerRisk, p)
        }
        Profile::Casualty => {
            let p: &[Peril] = if u < 0.5 {
                &[Peril::Wind]
            } else {
                &[Peril::Wildfire]
            };
            (LineOfBusiness::Casualty, p)
        }
    };
    (lob, perils.iter().copied().collect())
}

/// Zone preference by dominant peril: windstorm hugs the coast, wildfire the
/// dry interior.
fn zone_affinity(zone: &Zone, perils: &BTreeSet<Peril>) -> f64 {
    let mut w: f64 = 1.0;
    if perils.contains(&Peril::Wind) && zone.coastal {
        w = w.max(4.0);
    }
    if perils.contains(&Peril::Wildfire) && zone.center.0 > 60.0 {
        w = w.max(3.0);
    }
    if perils.contains(&Peril::Wind) && !perils.contains(&Peril::Wildfire) && !zone.coastal {
        w *= 0.5;
    }
    w
}

fn weighted_index(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn pick_zones(
    exposures: &ExposureState,
    lob_tiv: &[f64],
    perils: &BTreeSet<Peril>,
    rng: &mut SimRng,
) -> BTreeSet<ZoneId> {
    let weights: Vec<f64> = exposures
        .zones
        .iter()
        .zip(lob_tiv)
        .map(|(z, tiv)| {
            if *tiv > 0.0 {
                zone_affinity(z, perils)
            } else {
                0.0
            }
        })
        .collect();
    let all_zero = weights.iter().all(|w| *w == 0.0);
    let primary = if all_zero {
        rng.random_range(0..exposures.zones.len())
    } else {
        weighted_index(&weights, rng)
    };
    let mut zones = BTreeSet::from([exposures.zones[primary].id]);
    let extra = rng.random_range(0..=2usize);
    if extra > 0 {
        let c = exposures.zones[primary].center;
        let mut near: Vec<(f64, usize)> = exposures
            .zones
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != primary && (all_zero || lob_tiv[*i] > 0.0))
            .map(|(i, z)| ((z.center.0 - c.0).hypot(z.center.1 - c.1), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pool: Vec<usize> = near.iter().take(4).map(|(_, i)| *i).collect();
        for i in pool.choose_multiple(rng, extra.min(pool.len())) {
            zones.insert(exposures.zones[*i].id);
        }
    }
    zones
}

fn sample_ratio(cfg: &GeneratorConfig, rng: &mut SimRng) -> f64 {
    let r = cfg.attachment_limit_ratio;
    if r.sd == 0.0 {
        return r.mean;
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    loop {
        let z: f64 = n.sample(rng);
        if z.abs() <= 2.5 {
            return r.mean + r.sd * z;
        }
    }
}

fn pick_exclusions(perils: &BTreeSet<Peril>, rng: &mut SimRng) -> Vec<ExclusionClause> {
    let mut kinds = BTreeSet::new();
    let wind = perils.contains(&Peril::Wind);
    let flood = perils.contains(&Peril::Flood);
    if wind && flood {
        let u: f64 = rng.random();
        if u < 0.35 {
            kinds.insert(ExclusionKind::StormSurge);
        } else if u < 0.55 {
            kinds.insert(ExclusionKind::Flood);
        }
    } else if wind && rng.random_bool(0.3) {
        kinds.insert(ExclusionKind::StormSurge);
    }
    if !perils.contains(&Peril::Wildfire) && rng.random_bool(0.15) {
        kinds.insert(ExclusionKind::Wildfire);
    }
    if rng.random_bool(0.3) {
        kinds.insert(ExclusionKind::Terror);
    }
    if rng.random_bool(0.35) {
        kinds.insert(ExclusionKind::Nuclear);
    }
    if rng.random_bool(0.2) {
        kinds.insert(ExclusionKind::CyberSilent);
    }
    kinds.into_iter().map(ExclusionClause::new).collect()
}

fn mark_ambiguous(exclusions: &mut [ExclusionClause], rng: &mut SimRng) {
    if exclusions.is_empty() {
        return;
    }
    // The surge/flood boundary is the interesting one; prefer it when present.
    let target = exclusions
        .iter()
        .position(|e| e.kind.scope_partner().is_some())
        .unwrap_or_else(|| rng.random_range(0..exclusions.len()));
    exclusions[target].ambiguous_rendering = true;
}

/// Deterministic in `cfg` (including its seed).
pub fn generate_portfolio(cfg: &GeneratorConfig) -> Result<Portfolio, GenesisError> {
    cfg.validate()?;
    let exposures = generate_exposures(cfg)?;
    let mut mix_rng = stream(cfg.seed, "genesis.mix", 0);
    let mix = profiles(cfg, &mut mix_rng);

    let mut tiv_by_lob = vec![vec![0.0f64; exposures.zones.len()]; LineOfBusiness::ALL.len()];
    for loc in &exposures.locations {
        let zi = exposures
            .zone_index(loc.zone)
            .expect("location zone exists");
        let li = LineOfBusiness::ALL
            .iter()
            .position(|l| *l == loc.line_of_business)
            .unwrap();
        tiv_by_lob[li][zi] += loc.insured_value.as_f64();
    }
    let frac = cfg.limit_fraction;
    let frac_dist = LogNormal::new(frac.mu, frac.sigma)
        .map_err(|e| GenesisError::Config(format!("limit_fraction: {e}")))?;

    let mut treaties = Vec::with_capacity(cfg.n_treaties);
    for (i, profile) in mix.into_iter().enumerate() {
        let mut rng = stream(cfg.seed, "genesis.treaty", i as u64);
        let (lob, perils) = pick_perils(profile, &mut rng);
        let li = LineOfBusiness::ALL.iter().position(|l| *l == lob).unwrap();
        let zones = pick_zones(&exposures, &tiv_by_lob[li], &perils, &mut rng);
        let mut subject: f64 = zones
            .iter()
            .map(|z| tiv_by_lob[li][exposures.zone_index(*z).unwrap()])
            .sum();
        if subject <= 0.0 {
            subject = zones
                .iter()
                .map(|z| exposures.zone_tiv()[exposures.zone_index(*z).unwrap()].as_f64())
                .sum();
        }

        let limit =
            Money::from_f64(subject * frac_dist.sample(&mut rng)).round_to_grid(AMOUNT_GRID);
        let ratio = sample_ratio(cfg, &mut rng).max(1e-6);
        let attachment = limit.scale(ratio).round_to_grid(AMOUNT_GRID);
        let mut layers = vec![Layer {
            attachment,
            limit,
            reinstatements: rng.random_range(0..=2),
            reinstatement_premium_pct: 1.0,
        }];
        if rng.random_bool(cfg.two_layer_share) {
            let upper = limit
                .scale(rng.random_range(0.5..=1.0))
                .round_to_grid(AMOUNT_GRID);
            layers.push(Layer {
                attachment: attachment + limit,
                limit: upper,
                reinstatements: rng.random_range(0..=2),
                reinstatement_premium_pct: 1.0,
            });
        }

        let mut exclusions = pick_exclusions(&perils, &mut rng);
        if rng.random_bool(cfg.ambiguity_rate) {
            mark_ambiguous(&mut exclusions, &mut rng);
        }
        let hours_clause = if lob == LineOfBusiness::PropertyCat {
            let u: f64 = rng.random();
            if u < 0.5 {
                Some(72)
            } else if u < 0.7 {
                Some(96)
            } else if u < 0.85 {
                Some(168)
            } else {
                None
            }
        } else {
            None
        };

        let terms = TreatyTerms {
            id: TreatyId(format!("TR-{:04}", i + 1)),
            line_of_business: lob,
            layers,
            perils,
            exclusions,
            hours_clause,
            zones,
        };
        debug_assert!(terms.validate().is_ok(), "{:?}", terms.validate());
        let wording = render_wording(&terms);
        treaties.push(Treaty { terms, wording });
    }
    Ok(Portfolio {
        treaties,
        exposures,
    })
}
