//! Slot-level network simulator.

mod empirical;
mod episodes;
mod theta;
mod trace;
mod world;

use std::fmt;
use std::str::FromStr;

pub use empirical::{collect_transitions, empirical_kernel, EmpiricalKernel, TransitionCounts, MIN_ROW_VISITS, MIN_SAMPLES};
pub use episodes::{run_episodes, SimMetrics, SimOptions, DEFAULT_WARMUP, HORIZON_TAIL_BOUND};
pub use theta::{estimate_theta, ThetaEstimate, DEFAULT_THETA_HALFWIDTH, HOP_SAMPLE_CAP};
pub use trace::{write_trace, TRACE_HEADER};
pub use world::{Outcome, Scenario, SlotRecord, UserAgent, UserSlot, World};

/// How newcomers hopping onto the same idle channel are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionProtocol {
    /// Every contender gives up when two or more arrive.
    AllHopping,
    /// One contender, chosen uniformly, gets the channel.
    Random,
}

impl CollisionProtocol {
    pub const ALL: [CollisionProtocol; 2] = [CollisionProtocol::AllHopping, CollisionProtocol::Random];
}

impl fmt::Display for CollisionProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollisionProtocol::AllHopping => "all-hopping",
            CollisionProtocol::Random => "random",
        })
    }
}

impl FromStr for CollisionProtocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all-hopping" | "allhopping" | "all_hopping" => Ok(CollisionProtocol::AllHopping),
            "random" => Ok(CollisionProtocol::Random),
            other => Err(format!("unknown collision protocol `{other}` (expected all-hopping or random)")),
        }
    }
}
