#![allow(dead_code)]

use reinsim_core::genesis::{generate_portfolio, GeneratorConfig, Portfolio};
use reinsim_core::perils::{CorrelationPreset, CorrelationSpec};
use reinsim_core::treaty::ExclusionKind;
use reinsim_core::Money;
use reinsim_kernel::{World, WorldConfig};

pub const SEED: u64 = 11;

pub fn portfolio(n: usize) -> Portfolio {
    generate_portfolio(&GeneratorConfig {
        n_treaties: n,
        seed: SEED,
        ..Default::default()
    })
    .unwrap()
}

pub fn world_config() -> WorldConfig {
    let mut cfg = WorldConfig::default();
    cfg.hazard.n_years = 2_000;
    cfg
}

pub fn world_with(n: usize, cfg: &WorldConfig) -> World {
    World::build(
        portfolio(n),
        cfg,
        &CorrelationSpec::preset(CorrelationPreset::Medium),
        SEED,
    )
    .unwrap()
}

pub fn small_world() -> World {
    world_with(60, &world_config())
}

/// Own funds and appetites so large that no norm can bind.
pub fn roomy_world(n: usize) -> World {
    let cfg = WorldConfig {
        own_funds: Some(Money::millions(10_000_000)),
        zone_appetite_multiple: 1e4,
        tail_var_appetite_multiple: 1e4,
        ..world_config()
    };
    world_with(n, &cfg)
}

/// First treaty whose surge exclusion is worded without its scope and which
/// does not also exclude flood.
pub fn elided_surge_index(p: &Portfolio) -> usize {
    p.treaties
        .iter()
        .position(|t| {
            let ex = &t.terms.exclusions;
            ex.iter()
                .any(|e| e.kind == ExclusionKind::StormSurge && e.ambiguous_rendering)
                && !ex.iter().any(|e| e.kind == ExclusionKind::Flood)
        })
        .expect("portfolio has an elided surge exclusion")
}
