//! Scan engine, streaming service and closed-loop demos for the crossknit
//! tactile sensor model.

pub mod demo;
pub mod engine;
pub mod live;
pub mod protocol;
pub mod scenario;
pub mod service;
pub mod wire;

pub use engine::{run_scenario, EngineOptions, FieldSource, Sampling, ScanEngine};
pub use scenario::{Keyframe, Scenario, ScenarioError};
