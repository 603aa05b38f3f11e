//! Agent-based simulation of student migration between public and private
//! primary schools, with segregation metrics, parameter sweeps and a graph
//! view of the model's own structure.

pub mod dump;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod network;
pub mod params;
pub mod rng;

pub use dynamics::{run, setup, step, TickMetrics};
pub use error::{Error, Result};
pub use model::WorldState;
pub use params::SimParams;
