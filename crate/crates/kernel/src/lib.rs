//! Round-based negotiation over a simulated reinsurance book: agents,
//! typed messages, norm projection and equilibrium certification.

pub mod adapter;
pub mod agents;
pub mod env;
pub mod episode;
pub mod equilibrium;
pub mod governance;
pub mod observe;
pub mod projection;
pub mod round;
pub mod trace;
pub mod world;

pub use episode::{run_episode, EpisodeOutcome, KernelConfig, Profile};
pub use world::{World, WorldConfig};
