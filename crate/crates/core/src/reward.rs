//! Reward components and their scalarisation.

use std::ops::Add;

use serde::{Deserialize, Serialize};

/// `cap` is a gain; the other three are penalty magnitudes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub cap: f64,
    pub port: f64,
    pub cons: f64,
    pub gov: f64,
}

impl Add for RewardVector {
    type Output = RewardVector;

    fn add(self, o: RewardVector) -> RewardVector {
        RewardVector {
            cap: self.cap + o.cap,
            port: self.port + o.port,
            cons: self.cons + o.cons,
            gov: self.gov + o.gov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for ScalarWeights {
    fn default() -> Self {
        ScalarWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 2.0,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightsError {
    #[error("weights must be finite and non-negative")]
    Negative,
    #[error("at least one weight must be positive")]
    AllZero,
}

impl ScalarWeights {
    pub fn validate(&self) -> Result<(), WeightsError> {
        let w = [self.alpha, self.beta, self.gamma, self.delta];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(WeightsError::Negative);
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(WeightsError::AllZero);
        }
        Ok(())
    }
}

/// `α·cap − β·port − γ·cons − δ·gov`.
pub fn scalarize(r: &RewardVector, w: &ScalarWeights) -> f64 {
    w.alpha * r.cap - w.beta * r.port - w.gamma * r.cons - w.delta * r.gov
}
