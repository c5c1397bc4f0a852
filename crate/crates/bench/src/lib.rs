//! Benchmark harness: the four agent configurations over a generated book,
//! generator calibration and sensitivity sweeps, with reports.

pub mod config;
pub mod metrics;
pub mod report;
pub mod run;
pub mod sensitivity;

use reinsim_core::genesis::GenesisError;
use reinsim_kernel::episode::KernelError;
use reinsim_kernel::world::WorldError;

pub use config::{RunConfig, Scenario};
pub use metrics::{metrics_rows, EpisodeRecord, Metric, MetricError, MetricsRow};
pub use report::Report;
pub use sensitivity::{ScenarioResult, Sensitivity, Structural};

use crate::run::{portfolio, run_records, validate_generator};
use crate::sensitivity::structural;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("report encoding: {0}")]
    Encode(String),
}

/// A report together with the per-episode records of its base run.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub report: Report,
    pub records: Vec<EpisodeRecord>,
}

fn scenario_result(
    cfg: &RunConfig,
    s: &Scenario,
) -> Result<(ScenarioResult, Vec<EpisodeRecord>), BenchError> {
    let book = portfolio(cfg)?;
    let records = run_records(cfg, &book, s)?;
    let rows = metrics_rows(&records, cfg.expense_ratio)?;
    let structural = structural(&rows, &records, cfg.max_rounds);
    Ok((
        ScenarioResult {
            scenario: *s,
            rows,
            structural,
        },
        records,
    ))
}

/// The four profiles on identical books and seeds, generator calibration,
/// and the sensitivity sweep when enabled.
pub fn run_benchmark(cfg: &RunConfig) -> Result<Benchmark, BenchError> {
    cfg.validate()?;
    let validation = validate_generator(cfg)?;
    let (base, records) = scenario_result(cfg, &cfg.base())?;
    let sensitivity = if cfg.sensitivity {
        Some(sweep_from(cfg, base.clone())?)
    } else {
        None
    };
    Ok(Benchmark {
        report: Report::new(cfg, base, validation, sensitivity),
        records,
    })
}

/// The sensitivity sweep on its own.
pub fn sweep(cfg: &RunConfig) -> Result<Sensitivity, BenchError> {
    cfg.validate()?;
    let (base, _) = scenario_result(cfg, &cfg.base())?;
    sweep_from(cfg, base)
}

fn sweep_from(cfg: &RunConfig, base: ScenarioResult) -> Result<Sensitivity, BenchError> {
    let mut all = vec![base];
    for s in cfg.scenarios().iter().skip(1) {
        all.push(scenario_result(cfg, s)?.0);
    }
    Ok(Sensitivity::new(all))
}
