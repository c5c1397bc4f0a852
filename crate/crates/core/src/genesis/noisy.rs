//! A misreading parser: the exact parse followed by independent per-clause
//! corruption. Stands in for a fallible reader of treaty wordings.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::wording::{parse_wording_exact, ParseError};
use super::GenesisError;
use crate::money::Money;
use crate::treaty::TreatyTerms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Per attachment and per limit.
    pub amount: f64,
    /// Per exclusion rendered with explicit scope.
    pub exclusion: f64,
    /// Per exclusion rendered with elided scope.
    pub ambiguous_exclusion: f64,
    pub hours: f64,
}

impl NoiseModel {
    pub const EXACT: NoiseModel = NoiseModel {
        amount: 0.0,
        exclusion: 0.0,
        ambiguous_exclusion: 0.0,
        hours: 0.0,
    };

    pub fn uniform(p: f64) -> Self {
        NoiseModel {
            amount: p,
            exclusion: p,
            ambiguous_exclusion: p,
            hours: p,
        }
    }

    pub fn validate(&self) -> Result<(), GenesisError> {
        for (name, p) in [
            ("amount", self.amount),
            ("exclusion", self.exclusion),
            ("ambiguous_exclusion", self.ambiguous_exclusion),
            ("hours", self.hours),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GenesisError::Config(format!(
                    "noise probability {name} = {p} is not in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        *self == Self::EXACT
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoisyParseError {
    #[error(transparent)]
    Config(#[from] GenesisError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

const MISREAD_FACTORS: [f64; 4] = [0.5, 0.8, 1.25, 2.0];
const HOURS_CHOICES: [u32; 6] = [24, 48, 72, 96, 120, 168];

fn misread_amount<R: Rng>(m: Money, rng: &mut R) -> Money {
    let f = *MISREAD_FACTORS.choose(rng).expect("non-empty");
    let out = m.scale(f);
    if out == m {
        m + Money::from_major(10_000)
    } else {
        out
    }
}

fn hit<R: Rng>(p: f64, rng: &mut R) -> bool {
    // Always consume one draw so the stream position does not depend on p.
    let u: f64 = rng.random();
    u < p
}

/// Clauses are visited in wording order: layers, exclusions, hours.
pub fn parse_wording_noisy<R: Rng>(
    text: &str,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<TreatyTerms, NoisyParseError> {
    noise.validate()?;
    let mut t = parse_wording_exact(text)?;
    for layer in &mut t.layers {
        if hit(noise.amount, rng) {
            layer.attachment = misread_amount(layer.attachment, rng);
        }
        if hit(noise.amount, rng) {
            layer.limit = misread_amount(layer.limit, rng);
        }
    }
    let original = std::mem::take(&mut t.exclusions);
    let mut kept = Vec::with_capacity(original.len());
    for e in &original {
        let p = if e.ambiguous_rendering {
            noise.ambiguous_exclusion
        } else {
            noise.exclusion
        };
        if !hit(p, rng) {
            kept.push(*e);
            continue;
        }
        match e.kind.scope_partner() {
            Some(partner) if !original.iter().any(|o| o.kind == partner) => {
                let mut flipped = *e;
                flipped.kind = partner;
                kept.push(flipped);
            }
            _ => {}
        }
    }
    kept.sort();
    kept.dedup_by_key(|e| e.kind);
    t.exclusions = kept;
    if let Some(h) = t.hours_clause {
        if hit(noise.hours, rng) {
            let others: Vec<u32> = HOURS_CHOICES.iter().copied().filter(|c| *c != h).collect();
            t.hours_clause = Some(*others.choose(rng).expect("non-empty"));
        }
    }
    Ok(t)
}
