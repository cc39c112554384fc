//! Simulation and optimisation engine for privacy-aware split inference at the
//! network edge.

pub mod catalog;
pub mod coalition;
pub mod delay;
pub mod deploy;
pub mod partition;
pub mod privacy;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod topology;
pub mod units;

pub use catalog::{load_catalog, Catalog, CatalogError, LayerProfile, ModelId, ModelProfile, SplitAccounting};
pub use coalition::{GameConfig, PartitionStructure};
pub use delay::{DelayBreakdown, LinkBudget};
pub use topology::{ChannelModel, EdgeServer, MobileDevice};
pub use scenario::{Scenario, ScenarioTemplate, SweepAxis};
pub use sim::{run_horizon, Policy, RunResult};
