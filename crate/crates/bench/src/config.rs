use std::path::{Path, PathBuf};

use reinsim_core::genesis::GeneratorConfig;
use reinsim_core::perils::{CorrelationPreset, CorrelationSpec};
use reinsim_core::reward::ScalarWeights;
use reinsim_kernel::env::PricingParams;
use reinsim_kernel::episode::NoiseProfiles;
use reinsim_kernel::{KernelConfig, WorldConfig};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Everything a benchmark run depends on. The portfolio comes from
/// `generator` and stays fixed across `seeds`; each seed redraws the hazard
/// sample and the agents' reading noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub world: WorldConfig,
    pub correlation: CorrelationPreset,
    pub solvency_threshold: f64,
    pub max_rounds: u32,
    pub weights: ScalarWeights,
    pub pricing: PricingParams,
    pub noise: NoiseProfiles,
    pub seeds: Vec<u64>,
    pub n_treaties: usize,
    /// Expenses charged against premium in the capital efficiency metric.
    pub expense_ratio: f64,
    /// Repeat the run over the correlation presets and moved thresholds.
    pub sensitivity: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let kernel = KernelConfig::default();
        RunConfig {
            generator: GeneratorConfig::default(),
            world: WorldConfig::default(),
            correlation: CorrelationPreset::Medium,
            solvency_threshold: kernel.regulatory.solvency_threshold,
            max_rounds: kernel.regulatory.max_rounds,
            weights: kernel.weights,
            pricing: kernel.pricing,
            noise: kernel.noise,
            seeds: vec![1, 2, 3],
            n_treaties: 500,
            expense_ratio: 0.0,
            sensitivity: true,
            out_dir: None,
        }
    }
}

/// One point of the environment grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub correlation: CorrelationPreset,
    pub solvency_threshold: f64,
}

impl Scenario {
    pub fn label(&self) -> String {
        format!(
            "{} correlation, threshold {:.2}",
            self.correlation.label(),
            self.solvency_threshold
        )
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Io(path.display().to_string(), e))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.n_treaties == 0 {
            return bad("n_treaties must be at least 1".into());
        }
        if !(self.solvency_threshold > 0.0 && self.solvency_threshold.is_finite()) {
            return bad(format!(
                "solvency threshold must be positive, got {}",
                self.solvency_threshold
            ));
        }
        if !(0.0..1.0).contains(&self.expense_ratio) {
            return bad(format!(
                "expense ratio must lie in [0, 1), got {}",
                self.expense_ratio
            ));
        }
        self.generator()
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        self.kernel(&self.base()).validate()?;
        Ok(())
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_treaties: self.n_treaties,
            ..self.generator.clone()
        }
    }

    pub fn base(&self) -> Scenario {
        Scenario {
            correlation: self.correlation,
            solvency_threshold: self.solvency_threshold,
        }
    }

    /// The base point, every other correlation preset, and the threshold
    /// moved by ten percent either way.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let base = self.base();
        let mut out = vec![base];
        out.extend(
            CorrelationPreset::ALL
                .into_iter()
                .filter(|p| *p != base.correlation)
                .map(|correlation| Scenario {
                    correlation,
                    ..base
                }),
        );
        for f in [0.9, 1.1] {
            out.push(Scenario {
                solvency_threshold: base.solvency_threshold * f,
                ..base
            });
        }
        out
    }

    pub fn kernel(&self, s: &Scenario) -> KernelConfig {
        let mut k = KernelConfig {
            pricing: self.pricing.clone(),
            weights: self.weights,
            noise: self.noise,
            ..KernelConfig::default()
        };
        k.regulatory.solvency_threshold = s.solvency_threshold;
        k.regulatory.max_rounds = self.max_rounds;
        k
    }

    pub fn correlation_spec(s: &Scenario) -> CorrelationSpec {
        CorrelationSpec::preset(s.correlation)
    }

    /// Sets the generator seed and renumbers the run seeds from `seed`.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.generator.seed = seed;
        let n = self.seeds.len().max(1) as u64;
        self.seeds = (0..n).map(|i| seed + i).collect();
        self
    }
}
