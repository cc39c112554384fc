//! Time-slotted simulation: requests, per-slot decisions, metrics and sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioError;

pub mod context;
pub mod horizon;
pub mod output;
pub mod requests;
pub mod slot;
pub mod sweep;
pub mod validate;

pub use context::{CoalitionPlan, MdOutcome, ServeMode, SlotContext};
pub use horizon::{run_horizon, RunResult, Summary};
pub use requests::{Request, RequestModel};
pub use slot::{run_slot, SlotMetrics, SlotState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("a run needs at least one slot")]
    NoSlots,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Proposed,
    #[serde(rename = "fl")]
    FullLocal,
    #[serde(rename = "fe")]
    FullEdge,
    Matching,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Proposed, Policy::FullLocal, Policy::FullEdge, Policy::Matching];
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Proposed => "proposed",
            Policy::FullLocal => "fl",
            Policy::FullEdge => "fe",
            Policy::Matching => "matching",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown policy `{0}` (expected proposed, fl, fe or matching)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "proposed" => Ok(Policy::Proposed),
            "fl" | "full-local" => Ok(Policy::FullLocal),
            "fe" | "full-edge" => Ok(Policy::FullEdge),
            "matching" => Ok(Policy::Matching),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}
