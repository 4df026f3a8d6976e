//! Lightweight PUF-based authentication and key agreement between users,
//! a gateway node and UAVs, run over a simulated adversarial network.
//!
//! The roles live in [`user`], [`gwn`] and [`uav`]; [`wire`] fixes the
//! message encodings; [`simnet`] drives whole deployments, plays the
//! Dolev-Yao adversary and checks what it can derive; [`metrics`] turns
//! instrumented runs into overhead tables.

pub mod acceptance;
pub mod gwn;
pub mod meter;
pub mod metrics;
pub mod par;
pub mod primitives;
pub mod replay;
pub mod session;
pub mod simnet;
pub mod uav;
pub mod user;
pub mod wire;

pub use meter::{Meter, OpCounter};
pub use session::{ProtocolConfig, SessionKey, SessionTranscript};
