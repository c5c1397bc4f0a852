//! Shared domain types and simulation engines: treaties and their wordings,
//! hazard simulation, capital and portfolio arithmetic, the global state,
//! typed messages, norms, rewards and the audit chain.

pub mod action;
pub mod audit;
pub mod capital;
pub mod folio;
pub mod genesis;
pub mod linalg;
pub mod message;
pub mod money;
pub mod norms;
pub mod perils;
pub mod reward;
pub mod rng;
pub mod role;
pub mod state;
pub mod stats;
pub mod treaty;

pub use money::Money;
