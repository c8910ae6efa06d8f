use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::jammers::JammerStrategy;
use crate::mdp::StayingPolicy;
use crate::netsim::{run_episodes, CollisionProtocol, Scenario, SimOptions, ThetaEstimate, DEFAULT_THETA_HALFWIDTH};
use crate::params::{NetworkConfig, RewardParams};
use crate::rng::split_seed;

use super::{best_response_f, inactive_g};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Target 95% half-width of each theta estimate; also the quantization step.
    pub theta_halfwidth: f64,
    pub warmup: usize,
    /// Episodes per candidate when a two-cycle is settled by simulation.
    pub resolve: SimOptions,
}

impl FixedPointOptions {
    pub fn new(rewards: &RewardParams) -> Self {
        let resolve = SimOptions::new(4_000, rewards);
        Self {
            theta_halfwidth: DEFAULT_THETA_HALFWIDTH,
            warmup: resolve.warmup,
            resolve,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub policy: StayingPolicy,
    pub theta: f64,
    pub theta_ci: (f64, f64),
    /// Number of times the threshold changed before it settled.
    pub iterations: usize,
    /// `(K_j, theta_j)` with `theta_j` the quantized estimate under `K_j`.
    pub trajectory: Vec<(StayingPolicy, f64)>,
    pub converged: bool,
    /// A two-cycle was broken by comparing simulated EDSRs.
    pub cycle_resolved: bool,
}

/// Rounds `theta` to the nearest multiple of `step`.
pub fn quantize(theta: f64, step: f64) -> f64 {
    // dividing by the integral reciprocal keeps grid points like 0.018 exact
    ((theta / step).round() / step.recip()).clamp(0.0, 1.0)
}

/// Alternates theta <- g(K) and K <- f(theta) from `initial` until the
/// threshold repeats.
///
/// Each theta estimate is quantized to the half-width grid before f is
/// applied. If the thresholds alternate between two values, both theta
/// values are re-estimated at four times the precision; if neither
/// threshold is then a fixed point, the one with the higher simulated EDSR
/// is returned with `cycle_resolved` set. Gives up after `4(T - 1)`
/// changes.
pub fn fixed_point(
    initial: StayingPolicy,
    config: &NetworkConfig,
    rewards: &RewardParams,
    jammer: JammerStrategy,
    protocol: CollisionProtocol,
    opts: &FixedPointOptions,
    seed: u64,
) -> Result<FixedPointResult> {
    let t = config.period();
    if !matches!(initial, StayingPolicy::Threshold(k) if k < t) {
        return Err(Error::invalid(
            "initial_K",
            format!("must be a threshold in [0, {}], got {initial}", t - 1),
        ));
    }
    if jammer != JammerStrategy::BasicSweep {
        return Err(Error::invalid(
            "jammer",
            format!("the fixed point needs the closed-form sweep kernel, got {jammer}"),
        ));
    }
    let step = opts.theta_halfwidth;
    let mut cache: HashMap<StayingPolicy, ThetaEstimate> = HashMap::new();
    let mut g = |policy: StayingPolicy| -> Result<ThetaEstimate> {
        if let Some(est) = cache.get(&policy) {
            return Ok(*est);
        }
        let est = inactive_g(policy, config, jammer, protocol, step, opts.warmup, seed)?;
        cache.insert(policy, est);
        Ok(est)
    };

    let max_changes = 4 * (t - 1);
    let mut trajectory = Vec::new();
    let mut current = initial;
    let mut changes = 0;
    loop {
        let est = g(current)?;
        let theta = quantize(est.theta, step);
        trajectory.push((current, theta));
        let next = best_response_f(theta, config, rewards)?;
        if next == current {
            trajectory.push((next, theta));
            return Ok(FixedPointResult {
                policy: current,
                theta,
                theta_ci: est.ci,
                iterations: changes,
                trajectory,
                converged: true,
                cycle_resolved: false,
            });
        }
        let len = trajectory.len();
        if len >= 2 && trajectory[len - 2].0 == next {
            let mut result = resolve_cycle(next, current, config, rewards, jammer, protocol, opts, seed)?;
            trajectory.append(&mut result.trajectory);
            result.trajectory = trajectory;
            result.iterations = changes + 1;
            return Ok(result);
        }
        changes += 1;
        if changes > max_changes {
            return Ok(FixedPointResult {
                policy: next,
                theta,
                theta_ci: est.ci,
                iterations: changes,
                trajectory,
                converged: false,
                cycle_resolved: false,
            });
        }
        current = next;
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_cycle(
    a: StayingPolicy,
    b: StayingPolicy,
    config: &NetworkConfig,
    rewards: &RewardParams,
    jammer: JammerStrategy,
    protocol: CollisionProtocol,
    opts: &FixedPointOptions,
    seed: u64,
) -> Result<FixedPointResult> {
    let step = opts.theta_halfwidth / 4.0;
    let fine_seed = split_seed(seed, 1);
    let mut fixed = Vec::new();
    for policy in [a, b] {
        let est = inactive_g(policy, config, jammer, protocol, step, opts.warmup, fine_seed)?;
        let theta = quantize(est.theta, step);
        if best_response_f(theta, config, rewards)? == policy {
            fixed.push((policy, theta, est.ci));
        }
    }
    if let [(policy, theta, ci)] = fixed[..] {
        return Ok(FixedPointResult {
            policy,
            theta,
            theta_ci: ci,
            iterations: 0,
            trajectory: vec![(policy, theta), (policy, theta)],
            converged: true,
            cycle_resolved: false,
        });
    }
    let mut best: Option<(f64, StayingPolicy, f64, (f64, f64))> = None;
    for policy in [a, b] {
        let scenario = Scenario::new(*config, jammer, protocol, policy);
        let sim = run_episodes(&scenario, rewards, &opts.resolve, seed)?;
        let better = match best {
            None => true,
            Some((v, p, ..)) => sim.edsr_estimate > v || (sim.edsr_estimate == v && policy.order_key() < p.order_key()),
        };
        if better {
            best = Some((sim.edsr_estimate, policy, sim.theta_hat, sim.theta_ci));
        }
    }
    let (_, policy, theta, ci) = best.expect("two candidates");
    Ok(FixedPointResult {
        policy,
        theta,
        theta_ci: ci,
        iterations: 0,
        trajectory: vec![(policy, theta), (policy, theta)],
        converged: true,
        cycle_resolved: true,
    })
}
