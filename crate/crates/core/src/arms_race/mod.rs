//! Best-response dynamics between the users' staying threshold and the
//! jammer.

mod fixed_point;
mod rounds;
mod search;

pub use fixed_point::{fixed_point, quantize, FixedPointOptions, FixedPointResult};
pub use rounds::{arms_race, write_round_log, ArmsRaceOptions, ArmsRaceRound, EdsrSource, ROUND_LOG_HEADER};
pub use search::{best_threshold_by_simulation, CandidateValue, SearchOptions, ThresholdSearch};

use crate::error::Result;
use crate::jammers::JammerStrategy;
use crate::mdp::{greedy_policy, sweep_kernel, MdpModel, StayingPolicy, ValueIteration};
use crate::netsim::{estimate_theta, CollisionProtocol, Scenario, ThetaEstimate};
use crate::params::{NetworkConfig, RewardParams};

/// f: the optimal staying policy against the sweep when hops end inactive
/// with probability `theta`.
pub fn best_response_f(theta: f64, config: &NetworkConfig, rewards: &RewardParams) -> Result<StayingPolicy> {
    let model = MdpModel::new(sweep_kernel(config, theta)?, *rewards)?;
    greedy_policy(&ValueIteration::default().solve(&model)?)
}

/// g: the inactive probability when every user runs `policy` against
/// `jammer`.
pub fn inactive_g(
    policy: StayingPolicy,
    config: &NetworkConfig,
    jammer: JammerStrategy,
    protocol: CollisionProtocol,
    halfwidth: f64,
    warmup: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    let scenario = Scenario::new(*config, jammer, protocol, policy);
    estimate_theta(&scenario, halfwidth, warmup, seed)
}
