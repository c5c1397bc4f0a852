//! Running the four configurations over a fixed book and several seeds.

use rayon::prelude::*;
use reinsim_core::genesis::validation::{validate_statistics, ValidationReport};
use reinsim_core::genesis::{generate_portfolio, GeneratorConfig, Portfolio};
use reinsim_kernel::episode::run_in_context;
use reinsim_kernel::{EpisodeOutcome, KernelConfig, Profile, World};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scenario};
use crate::metrics::EpisodeRecord;
use crate::BenchError;

pub fn portfolio(cfg: &RunConfig) -> Result<Portfolio, BenchError> {
    Ok(generate_portfolio(&cfg.generator())?)
}

pub fn build_world(
    cfg: &RunConfig,
    portfolio: Portfolio,
    scenario: &Scenario,
    seed: u64,
) -> Result<World, BenchError> {
    Ok(World::build(
        portfolio,
        &cfg.world,
        &RunConfig::correlation_spec(scenario),
        seed,
    )?)
}

/// Runs every `profiles` episode of every treaty under every seed and maps
/// each outcome through `f`. Results come back ordered by seed, treaty and
/// profile whatever the scheduling.
pub fn for_each_episode<T, F>(
    cfg: &RunConfig,
    portfolio: &Portfolio,
    scenario: &Scenario,
    profiles: &[Profile],
    f: F,
) -> Result<Vec<T>, BenchError>
where
    T: Send,
    F: Fn(&World, &KernelConfig, EpisodeOutcome) -> T + Sync,
{
    let kernel = cfg.kernel(scenario);
    kernel.validate()?;
    let mut out = Vec::with_capacity(cfg.seeds.len() * portfolio.treaties.len() * profiles.len());
    for &seed in &cfg.seeds {
        let world = build_world(cfg, portfolio.clone(), scenario, seed)?;
        let batch: Result<Vec<Vec<T>>, BenchError> = (0..world.len())
            .into_par_iter()
            .map(|i| {
                let ctx = world.episode_context(i, &kernel.regulatory)?;
                profiles
                    .iter()
                    .map(|p| Ok(f(&world, &kernel, run_in_context(&ctx, *p, &kernel, seed)?)))
                    .collect()
            })
            .collect();
        out.extend(batch?.into_iter().flatten());
    }
    Ok(out)
}

pub fn run_records(
    cfg: &RunConfig,
    portfolio: &Portfolio,
    scenario: &Scenario,
) -> Result<Vec<EpisodeRecord>, BenchError> {
    for_each_episode(cfg, portfolio, scenario, &Profile::ALL, |_, _, o| {
        EpisodeRecord::from(&o)
    })
}

/// Calibration of one generator seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedValidation {
    pub seed: u64,
    pub report: ValidationReport,
}

/// Generates a book per seed, simulates it under the base correlation and
/// checks its statistics against the market ranges.
pub fn validate_generator(cfg: &RunConfig) -> Result<Vec<SeedValidation>, BenchError> {
    cfg.seeds
        .iter()
        .map(|&seed| {
            let p = generate_portfolio(&GeneratorConfig {
                seed,
                ..cfg.generator()
            })?;
            let world = build_world(cfg, p, &cfg.base(), seed)?;
            let annual: Vec<Vec<f64>> = world.losses.iter().map(|l| l.annual.clone()).collect();
            let report = validate_statistics(&world.portfolio, &annual, world.own_funds)?;
            Ok(SeedValidation { seed, report })
        })
        .collect()
}
