//! Simulation model of a knitted resistive crossbar tactile skin.
//!
//! The crate covers the sensing chain from mechanical contact to robot
//! commands: [`pressure`] turns contacts into taxel resistances,
//! [`network`] solves the multiplexed readout circuit (including sneak
//! paths), [`pipeline`] turns frames into located contact events, and
//! [`robot`] maps events onto arm and mobile-base commands.

pub mod config;
pub mod error;
pub mod grid;
pub mod network;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod pipeline;
pub mod pressure;
pub mod readout;
pub mod robot;
pub mod timing;

pub use config::SensorConfig;
pub use error::{Result, SensorError};
pub use grid::Grid;
pub use pressure::{ContactPatch, ContactShape, PressureField, TransferParams};
pub use readout::{Frame, Resistance, ResistanceMatrix};
pub use timing::ScanTiming;
