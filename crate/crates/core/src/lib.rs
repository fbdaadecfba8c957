//! Positioning solvers, protocol cost accounting, energy model, rate
//! scheduler and discrete-time simulator for a cooperative, energy-harvesting
//! UWB locating system.

pub mod energy;
pub mod cli;
pub mod geometry;
pub mod protocol;
pub mod scheduler;
mod serde_units;
pub mod sim;
pub mod solvers;

pub use geometry::Position;
