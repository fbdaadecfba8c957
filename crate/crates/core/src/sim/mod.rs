//! Minute-resolution simulation of a deployment: harvesting, sleep and
//! leakage, scheduled active exchanges and opportunistic passive listening.

pub mod config;
pub mod engine;
pub mod measurements;
pub mod output;
pub mod stats;
pub mod world;

pub use config::{ConfigError, Layout, SimConfig, WorldConfig};
pub use engine::{run, ActiveOutcome, Simulation, World, MINUTES_PER_DAY};
pub use measurements::{synthesize_measurements, Exchange, Measurements};
pub use stats::{Aggregate, DailyRecord, NodeSummary, Role, SimStats};
pub use world::{reachable_anchors, RadioRange, Wall};
