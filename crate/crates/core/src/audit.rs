//! Hash-chained, append-only audit log.
//!
//! Each entry stores SHA-256 of its canonical JSON payload and the chain
//! digest of its predecessor, where the chain digest of an entry is
//! SHA-256 over `prev_hash ‖ payload_hash ‖ sequence ‖ timestamp`
//! (integers little-endian). JSONL form is one entry per line with fields in
//! declaration order and lowercase hex digests.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

pub type Digest = [u8; 32];

pub const GENESIS: Digest = [0u8; 32];

mod hex32 {
    use super::*;

    pub fn serialize<S: Serializer>(d: &Digest, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(d))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Digest, D::Error> {
        let s = String::deserialize(d)?;
        let mut out = [0u8; 32];
        hex::decode_to_slice(&s, &mut out).map_err(serde::de::Error::custom)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEntry {
    pub sequence: u64,
    pub timestamp: u32,
    #[serde(with = "hex32")]
    pub prev_hash: Digest,
    #[serde(with = "hex32")]
    pub payload_hash: Digest,
    pub payload: serde_json::Value,
}

impl AuditEntry {
    pub fn chain_digest(&self) -> Digest {
        let mut h = Sha256::new();
        h.update(self.prev_hash);
        h.update(self.payload_hash);
        h.update(self.sequence.to_le_bytes());
        h.update(self.timestamp.to_le_bytes());
        h.finalize().into()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("audit chain broken at entry {0}")]
    Tamper(usize),
    #[error("audit line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("audit head {found} does not match the recorded {expected}")]
    HeadMismatch { expected: String, found: String },
    #[error("event serialisation: {0}")]
    Serialize(String),
}

pub fn payload_digest(payload: &serde_json::Value) -> Digest {
    let bytes = serde_json::to_vec(payload).expect("JSON values serialise");
    Sha256::digest(bytes).into()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditLog {
    entries: Vec<AuditEntry>,
    verified: usize,
}

impl AuditLog {
    pub fn new() -> Self {
        AuditLog::default()
    }

    /// Takes entries as given; nothing is trusted until verified.
    pub fn from_entries(entries: Vec<AuditEntry>) -> Self {
        AuditLog {
            entries,
            verified: 0,
        }
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Chain digest of the tail entry, or all zeros for an empty log.
    pub fn head(&self) -> Digest {
        self.entries
            .last()
            .map_or(GENESIS, AuditEntry::chain_digest)
    }

    pub fn head_hex(&self) -> String {
        hex::encode(self.head())
    }

    fn verify_from(&self, start: usize) -> Result<(), AuditError> {
        let mut prev = if start == 0 {
            GENESIS
        } else {
            self.entries[start - 1].chain_digest()
        };
        for (i, e) in self.entries.iter().enumerate().skip(start) {
            if e.sequence != i as u64
                || e.prev_hash != prev
                || e.payload_hash != payload_digest(&e.payload)
            {
                return Err(AuditError::Tamper(i));
            }
            prev = e.chain_digest();
        }
        Ok(())
    }

    pub fn verify(&self) -> Result<(), AuditError> {
        self.verify_from(0)
    }

    pub fn append<E: Serialize>(
        &mut self,
        event: &E,
        timestamp: u32,
    ) -> Result<&AuditEntry, AuditError> {
        let payload =
            serde_json::to_value(event).map_err(|e| AuditError::Serialize(e.to_string()))?;
        self.append_value(payload, timestamp)
    }

    pub fn append_value(
        &mut self,
        payload: serde_json::Value,
        timestamp: u32,
    ) -> Result<&AuditEntry, AuditError> {
        self.verify_from(self.verified)?;
        self.verified = self.entries.len();
        let entry = AuditEntry {
            sequence: self.entries.len() as u64,
            timestamp,
            prev_hash: self.head(),
            payload_hash: payload_digest(&payload),
            payload,
        };
        self.entries.push(entry);
        self.verified = self.entries.len();
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entries serialise"));
            out.push('\n');
        }
        out
    }

    /// Parses and verifies; each line must be byte-identical to the
    /// canonical serialisation of the entry it decodes to.
    pub fn from_jsonl(text: &str) -> Result<AuditLog, AuditError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let e: AuditEntry =
                serde_json::from_str(line).map_err(|err| AuditError::Malformed {
                    line: i,
                    message: err.to_string(),
                })?;
            if serde_json::to_string(&e).expect("entries serialise") != line {
                return Err(AuditError::Tamper(i));
            }
            entries.push(e);
        }
        let log = AuditLog::from_entries(entries);
        log.verify()?;
        Ok(AuditLog {
            verified: log.entries.len(),
            ..log
        })
    }

    /// [`AuditLog::from_jsonl`] anchored to a head digest kept apart from
    /// the trace. The chain alone cannot protect its last entry's timestamp.
    pub fn from_jsonl_anchored(text: &str, head_hex: &str) -> Result<AuditLog, AuditError> {
        let log = AuditLog::from_jsonl(text)?;
        let found = log.head_hex();
        if found != head_hex {
            return Err(AuditError::HeadMismatch {
                expected: head_hex.to_string(),
                found,
            });
        }
        Ok(log)
    }
}
