use crate::analysis::theta_bounds;
use crate::error::{Error, Result};
use crate::jammers::JammerStrategy;
use crate::mdp::StayingPolicy;
use crate::netsim::{run_episodes, CollisionProtocol, Scenario, SimMetrics, SimOptions};
use crate::params::{NetworkConfig, RewardParams};

use super::best_response_f;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub sim: SimOptions,
    /// Cap on best-response rounds with two or more users.
    pub max_rounds: usize,
}

impl SearchOptions {
    pub fn new(episodes: usize, rewards: &RewardParams) -> Self {
        Self {
            sim: SimOptions::new(episodes, rewards),
            max_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateValue {
    pub policy: StayingPolicy,
    pub edsr: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub policy: StayingPolicy,
    /// Simulated EDSR with every user running `policy`.
    pub edsr: f64,
    pub stderr: f64,
    pub theta: f64,
    /// Values of the deviating user in the last round.
    pub candidates: Vec<CandidateValue>,
    pub rounds: usize,
}

fn argmax(values: &[CandidateValue]) -> CandidateValue {
    let mut best = values[0];
    for v in &values[1..] {
        if v.edsr > best.edsr || (v.edsr == best.edsr && v.policy.order_key() < best.policy.order_key()) {
            best = *v;
        }
    }
    best
}

fn evaluate(scenarios: impl Iterator<Item = (StayingPolicy, Scenario)>, rewards: &RewardParams, opts: &SearchOptions, seed: u64) -> Result<Vec<CandidateValue>> {
    scenarios
        .map(|(policy, scenario)| {
            let m: SimMetrics = run_episodes(&scenario, rewards, &opts.sim, seed)?;
            Ok(CandidateValue {
                policy,
                edsr: m.edsr_estimate,
                stderr: m.edsr_stderr,
            })
        })
        .collect()
}

/// Best staying threshold against `jammer`, found by simulation.
///
/// Every threshold in `[0, T-1]` and the minimal policy are simulated with
/// the same episode seeds, so candidates share jammer and user streams.
/// With several users, one user deviates while the others keep a common
/// threshold, starting from the best response to the middle of the
/// theta bounds; the common threshold moves to the deviator's best choice
/// until the two agree or `max_rounds` is reached. The reported EDSR comes
/// from a final run with every user on the chosen threshold. Ties go to the
/// smaller threshold.
pub fn best_threshold_by_simulation(
    config: &NetworkConfig,
    rewards: &RewardParams,
    jammer: JammerStrategy,
    protocol: CollisionProtocol,
    opts: &SearchOptions,
    seed: u64,
) -> Result<ThresholdSearch> {
    jammer.validate(config)?;
    if opts.max_rounds == 0 {
        return Err(Error::invalid("max_rounds", "must be at least 1"));
    }
    let candidates = StayingPolicy::candidates(config.period());
    let symmetric = |p: StayingPolicy| Scenario::new(*config, jammer, protocol, p);

    if config.users() == 1 {
        let values = evaluate(candidates.iter().map(|&p| (p, symmetric(p))), rewards, opts, seed)?;
        let best = argmax(&values);
        return Ok(ThresholdSearch {
            policy: best.policy,
            edsr: best.edsr,
            stderr: best.stderr,
            theta: 0.0,
            candidates: values,
            rounds: 1,
        });
    }
    let (choice, values, rounds) = {
        let bounds = theta_bounds(protocol, config.users(), config.channels())?;
        let mut others = best_response_f((bounds.lower + bounds.upper) / 2.0, config, rewards)?;
        let mut rounds = 0;
        let values = loop {
            rounds += 1;
            let values = evaluate(
                candidates.iter().map(|&p| (p, symmetric(others).with_focal(p))),
                rewards,
                opts,
                seed,
            )?;
            let best = argmax(&values).policy;
            let settled = best == others;
            others = best;
            if settled || rounds == opts.max_rounds {
                break values;
            }
        };
        (others, values, rounds)
    };

    let fin = run_episodes(&symmetric(choice), rewards, &opts.sim, seed)?;
    Ok(ThresholdSearch {
        policy: choice,
        edsr: fin.edsr_estimate,
        stderr: fin.edsr_stderr,
        theta: fin.theta_hat,
        candidates: values,
        rounds,
    })
}
