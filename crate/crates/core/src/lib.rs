//! Random bits from single-photon detection times.
//!
//! The crate simulates detectors driven by Poisson or thermal light on a
//! discrete clock ([`sim`]), extracts bits from the parity of the number of
//! clock slots between detections ([`extract`]), scores the output with the
//! 13-test NIST SP 800-22 battery ([`suite`]) and measures what the bias means
//! for entanglement-based and prepare-and-measure QKD ([`qkd`]). Closed-form
//! photon statistics live in [`models`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod extract;
pub mod io;
pub mod models;
pub mod qkd;
pub mod sim;
pub mod suite;

pub use error::{Error, Result};
pub use exec::Execution;
pub use extract::{BitStream, SymbolPair};
pub use models::{AnalyticBias, PhotonStatistics, SourceModel};
pub use sim::{ClockConfig, ClockMode, EventStream, IntraGateProfile};
pub use suite::{TestId, TestReport};
