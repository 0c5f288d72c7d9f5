//! Receiver-side hybrid-beamforming simulator.
//!
//! The crate models a MIMO receiver whose RF chains connect to a large
//! antenna array through a sparse, parity-check-style link pattern, and
//! minimizes the receiver's operating power by switching chains and antennas
//! on or off under rate, power, and insertion-loss constraints:
//!
//! - [`numerics`]: the small dense complex linear-algebra kernel.
//! - [`channel`]: multipath channel draws and distance-based path loss.
//! - [`topology`]: connection construction, validation, controller grouping.
//! - [`metrics`]: rate, power, energy efficiency, constraint checks.
//! - [`mars`]: the message-passing selection engine (sequential/parallel).
//! - [`genetic`]: the continuous genetic beamformer search and the joint loop.
//! - [`benchmarks`]: comparison baselines and the exhaustive oracle.
//! - [`harness`]: config loading, Monte-Carlo sweeps, CSV output.

pub mod benchmarks;
pub mod channel;
pub mod error;
pub mod genetic;
pub mod harness;
pub mod mars;
pub mod metrics;
pub mod numerics;
pub mod topology;

pub use error::{Error, Result};
