//! Simulated network, Dolev-Yao adversary and attack scenarios.

pub mod closure;
pub mod network;
pub mod scenarios;
pub mod world;

pub use closure::{closure, replay_skeleton, AdversaryKnowledge, Algebra, Closure, Derivation};
pub use network::{Endpoint, Envelope, MessageKind, NetError, Network, SimClock, Tamper};
pub use scenarios::{
    run_scenario, ScenarioConfig, ScenarioError, ScenarioReport, Verdict, SCENARIOS,
};
pub use world::{World, WorldConfig, WorldError};
