use std::collections::BTreeMap;

use proptest::prelude::*;
use reinsim_core::folio::*;
use reinsim_core::treaty::*;
use reinsim_core::Money;

fn terms(
    layers: Vec<Layer>,
    perils: &[Peril],
    exclusions: &[ExclusionKind],
    hours: Option<u32>,
) -> TreatyTerms {
    let mut ex: Vec<ExclusionKind> = exclusions.to_vec();
    ex.sort();
    ex.dedup();
    TreatyTerms {
        id: TreatyId("TR-0001".into()),
        line_of_business: LineOfBusiness::PropertyCat,
        layers,
        perils: perils.iter().copied().collect(),
        exclusions: ex.into_iter().map(ExclusionClause::new).collect(),
        hours_clause: hours,
        zones: [ZoneId(0)].into_iter().collect(),
    }
}

fn xs(attachment: i64, limit: i64) -> Layer {
    Layer::new(Money::millions(attachment), Money::millions(limit))
}

/// Every set partition of `0..n`, as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur.push(b);
            go(i + 1, n, cur, max.max(b), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
    } else {
        let mut cur = vec![0];
        go(1, n, &mut cur, 0, &mut out);
    }
    out
}

/// A partition is the occurrence grouping when each block holds one peril,
/// is a run of consecutive same-peril events spanning at most `h` from its
/// first member, and the next run of that peril starts more than `h` after.
fn is_grouping(p: &[usize], ev: &[(f64, Peril, i64)], h: Option<u32>) -> bool {
    let nb = p.iter().max().map_or(0, |m| m + 1);
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (i, b) in p.iter().enumerate() {
        blocks[*b].push(i);
    }
    let Some(h) = h else {
        return blocks.iter().all(|b| b.len() == 1);
    };
    let h = f64::from(h);
    for peril in Peril::ALL {
        let idx: Vec<usize> = (0..ev.len()).filter(|i| ev[*i].1 == peril).collect();
        let mut runs: Vec<&Vec<usize>> = Vec::new();
        for b in &blocks {
            if b.iter().any(|i| ev[*i].1 == peril) {
                if b.iter().any(|i| ev[*i].1 != peril) {
                    return false;
                }
                runs.push(b);
            }
        }
        runs.sort_by_key(|b| b[0]);
        let mut pos = 0;
        for r in &runs {
            if r.as_slice() != &idx[pos..pos + r.len()] {
                return false;
            }
            pos += r.len();
            let t0 = ev[r[0]].0;
            if r.iter().any(|i| ev[*i].0 - t0 > h) {
                return false;
            }
        }
        for w in runs.windows(2) {
            if ev[w[1][0]].0 - ev[w[0][0]].0 <= h {
                return false;
            }
        }
    }
    true
}

fn oracle(events: &[ClaimEvent], t: &TreatyTerms) -> (i64, Vec<(i64, i64)>) {
    let mut merged: Vec<(u32, f64, Peril, i64)> = Vec::new();
    for e in events {
        let peril = e.cause.peril();
        let excluded = t
            .exclusions
            .iter()
            .any(|x| x.kind.excluded_cause() == Some(e.cause));
        if !t.perils.contains(&peril) || excluded {
            continue;
        }
        match merged.iter_mut().find(|m| m.0 == e.event && m.2 == peril) {
            Some(m) => m.3 += e.loss.0,
            None => merged.push((e.event, e.hour, peril, e.loss.0)),
        }
    }
    let ev: Vec<(f64, Peril, i64)> = merged.iter().map(|m| (m.1, m.2, m.3)).collect();
    let valid: Vec<Vec<usize>> = partitions(ev.len())
        .into_iter()
        .filter(|p| is_grouping(p, &ev, t.hours_clause))
        .collect();
    assert_eq!(valid.len(), 1, "grouping must be unique");
    let p = &valid[0];
    let nb = p.iter().max().map_or(0, |m| m + 1);
    let mut occ = vec![0i64; nb];
    for (i, b) in p.iter().enumerate() {
        occ[*b] += ev[i].2;
    }
    let mut total = 0;
    let mut per_layer = Vec::new();
    for l in &t.layers {
        let (a, lim, n) = (l.attachment.0, l.limit.0, i64::from(l.reinstatements));
        let clipped: i64 = occ.iter().map(|x| (x - a).max(0).min(lim)).sum();
        let ceded = clipped.min(lim * (1 + n));
        let reinstated = ceded.min(lim * n);
        total += ceded;
        per_layer.push((ceded, reinstated));
    }
    (total, per_layer)
}

fn cause() -> impl Strategy<Value = LossCause> {
    prop_oneof![
        Just(LossCause::Wind),
        Just(LossCause::StormSurge),
        Just(LossCause::Flood),
        Just(LossCause::Wildfire),
    ]
}

fn claim_year() -> impl Strategy<Value = Vec<ClaimEvent>> {
    prop::collection::vec(
        (0u32..300, prop::collection::vec((cause(), 0i64..150), 1..3)),
        0..6,
    )
    .prop_map(|raw| {
        let mut v: Vec<(u32, Vec<(LossCause, i64)>)> = raw;
        v.sort_by_key(|(h, _)| *h);
        let mut out = Vec::new();
        for (id, (h, parts)) in v.into_iter().enumerate() {
            for (c, m) in parts {
                out.push(ClaimEvent {
                    event: id as u32,
                    hour: f64::from(h),
                    cause: c,
                    loss: Money::millions(m),
                });
            }
        }
        out
    })
}

fn treaty() -> impl Strategy<Value = TreatyTerms> {
    let perils = prop::sample::subsequence(Peril::ALL.to_vec(), 1..=3);
    let excl = prop::sample::subsequence(
        vec![
            ExclusionKind::StormSurge,
            ExclusionKind::Flood,
            ExclusionKind::Wildfire,
            ExclusionKind::Terror,
        ],
        0..=2,
    );
    let hours = prop_oneof![
        Just(None),
        Just(Some(24u32)),
        Just(Some(72)),
        Just(Some(168))
    ];
    let layers = (
        1i64..80,
        1i64..120,
        0u8..3,
        prop::option::of((1i64..120, 0u8..3)),
    );
    (perils, excl, hours, layers).prop_map(|(p, e, h, (a, l, r, second))| {
        let mut first = xs(a, l);
        first.reinstatements = r;
        let mut ls = vec![first];
        if let Some((l2, r2)) = second {
            let mut s = xs(a + l, l2);
            s.reinstatements = r2;
            ls.push(s);
        }
        terms(ls, &p, &e, h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn recovery_matches_enumeration_oracle(events in claim_year(), t in treaty()) {
        let rec = treaty_recovery(&events, &t).unwrap();
        let (total, per_layer) = oracle(&events, &t);
        prop_assert_eq!(rec.ceded.0, total);
        let got: Vec<(i64, i64)> = rec.layers.iter().map(|l| (l.ceded.0, l.reinstated.0)).collect();
        prop_assert_eq!(got, per_layer);
        prop_assert_eq!(rec.occurrence_ceded.iter().copied().sum::<Money>(), rec.ceded);
    }
}

proptest! {
    #[test]
    fn recovery_is_monotone_in_loss(events in claim_year(), t in treaty(), pick in any::<prop::sample::Index>(), bump in 0i64..100) {
        prop_assume!(!events.is_empty());
        let mut more = events.clone();
        let i = pick.index(more.len());
        more[i].loss += Money::millions(bump);
        let a = treaty_recovery(&events, &t).unwrap().ceded;
        let b = treaty_recovery(&more, &t).unwrap().ceded;
        prop_assert!(b >= a);
    }

    #[test]
    fn layer_recovery_is_bounded_and_monotone(loss in 0i64..1_000, extra in 0i64..1_000, a in 1i64..500, l in 1i64..500) {
        let (att, lim) = (Money::millions(a), Money::millions(l));
        let r = layer_recovery(Money::millions(loss), att, lim);
        prop_assert!(r >= Money::ZERO && r <= lim && r <= Money::millions(loss));
        prop_assert!(layer_recovery(Money::millions(loss + extra), att, lim) >= r);
    }

    #[test]
    fn retro_conserves_gross(
        occ in prop::collection::vec(0i64..1_000_000_000, 0..8),
        kind in 0u8..3,
        cession in 0.0f64..=1.0,
        a in 1i64..1_000_000_000,
        l in 1i64..1_000_000_000,
    ) {
        let occ: Vec<Money> = occ.into_iter().map(Money).collect();
        let s = match kind {
            0 => RetroStructure::QuotaShare { cession },
            1 => RetroStructure::ExcessOfLoss { attachment: Money(a), limit: Money(l) },
            _ => RetroStructure::AggregateXl { attachment: Money(a), limit: Money(l) },
        };
        let out = apply_retro(&occ, &s).unwrap();
        prop_assert_eq!(out.retained + out.recovered, out.gross);
        prop_assert!(out.recovered >= Money::ZERO && out.recovered <= out.gross);
    }

    #[test]
    fn tail_var_ignores_order(mut xs in prop::collection::vec(-1e9f64..1e9, 1..300), seed in any::<u64>()) {
        let a = tail_var(&xs, DEFAULT_TAIL_LEVEL).unwrap();
        let n = xs.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            xs.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(tail_var(&xs, DEFAULT_TAIL_LEVEL).unwrap(), a);
    }
}

#[test]
fn hours_clause_examples() {
    let t72 = terms(vec![xs(50, 100)], &[Peril::Flood], &[], Some(72));
    let floods = [
        ClaimEvent {
            event: 0,
            hour: 10.0,
            cause: LossCause::Flood,
            loss: Money::millions(40),
        },
        ClaimEvent {
            event: 1,
            hour: 40.0,
            cause: LossCause::Flood,
            loss: Money::millions(40),
        },
    ];
    assert_eq!(
        treaty_recovery(&floods, &t72).unwrap().ceded,
        Money::millions(30)
    );
    let t24 = TreatyTerms {
        hours_clause: Some(24),
        ..t72
    };
    assert_eq!(treaty_recovery(&floods, &t24).unwrap().ceded, Money::ZERO);
}

#[test]
fn excluded_surge_cedes_nothing() {
    let t = terms(
        vec![xs(1, 100)],
        &[Peril::Wind, Peril::Flood],
        &[ExclusionKind::StormSurge],
        Some(72),
    );
    let surge: Vec<ClaimEvent> = (0..4)
        .map(|i| ClaimEvent {
            event: i,
            hour: f64::from(i * 100),
            cause: LossCause::StormSurge,
            loss: Money::millions(90),
        })
        .collect();
    assert_eq!(treaty_recovery(&surge, &t).unwrap().ceded, Money::ZERO);
}

#[test]
fn unordered_sequence_rejected() {
    let t = terms(vec![xs(1, 100)], &[Peril::Wind], &[], None);
    let ev = [
        ClaimEvent {
            event: 0,
            hour: 50.0,
            cause: LossCause::Wind,
            loss: Money::millions(5),
        },
        ClaimEvent {
            event: 1,
            hour: 10.0,
            cause: LossCause::Wind,
            loss: Money::millions(5),
        },
    ];
    assert_eq!(treaty_recovery(&ev, &t), Err(FolioError::Unordered(1)));
}

#[test]
fn aggregate_xl_works_on_the_annual_sum() {
    let occ = [
        Money::millions(30),
        Money::millions(40),
        Money::millions(50),
    ];
    let s = RetroStructure::AggregateXl {
        attachment: Money::millions(100),
        limit: Money::millions(50),
    };
    let out = apply_retro(&occ, &s).unwrap();
    assert_eq!(out.gross, Money::millions(120));
    assert_eq!(out.recovered, Money::millions(20));
    let per_occ = RetroStructure::ExcessOfLoss {
        attachment: Money::millions(100),
        limit: Money::millions(50),
    };
    assert_eq!(apply_retro(&occ, &per_occ).unwrap().recovered, Money::ZERO);
    assert!(apply_retro(&occ, &RetroStructure::QuotaShare { cession: 1.5 }).is_err());
}

#[test]
fn five_treaty_accumulation() {
    let zones = |z: &[u16]| z.iter().map(|i| ZoneId(*i)).collect();
    let mk = |id: &str, layers: Vec<Layer>, z: &[u16]| TreatyTerms {
        id: TreatyId(id.into()),
        zones: zones(z),
        ..terms(layers, &[Peril::Wind], &[], None)
    };
    let book = [
        mk("A", vec![xs(50, 100)], &[1, 2]),
        mk("B", vec![xs(10, 20), xs(30, 30)], &[2]),
        mk("C", vec![xs(5, 15)], &[3]),
        mk("D", vec![xs(100, 200)], &[1, 3, 4]),
        mk("E", vec![xs(20, 25)], &[4]),
    ];
    let acc = zone_accumulation(&book);
    let expected: BTreeMap<ZoneId, Money> = [
        (ZoneId(1), Money::millions(300)),
        (ZoneId(2), Money::millions(150)),
        (ZoneId(3), Money::millions(215)),
        (ZoneId(4), Money::millions(225)),
    ]
    .into_iter()
    .collect();
    assert_eq!(acc, expected);
    assert!(zone_accumulation(&[]).is_empty());
}

#[test]
fn tail_var_examples() {
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    assert!((tail_var(&xs, 0.99).unwrap() - 99.01).abs() < 1e-9);
    assert_eq!(tail_var(&[7.5; 40], 0.99).unwrap(), 7.5);
    assert_eq!(tail_var(&[], 0.99), Err(FolioError::EmptySample));
}

#[test]
fn oracle_sees_every_partition() {
    let bell = [1, 1, 2, 5, 15, 52, 203];
    for (n, b) in bell.iter().enumerate() {
        assert_eq!(partitions(n).len(), *b);
    }
}
