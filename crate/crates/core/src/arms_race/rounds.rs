use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::format::sig;
use crate::jammers::JammerStrategy;
use crate::mdp::{edsr, MdpModel, StayingPolicy, TransitionKernel};
use crate::netsim::{run_episodes, CollisionProtocol, Scenario, SimOptions, ThetaEstimate};
use crate::params::{NetworkConfig, RewardParams};
use crate::stats::Z95;

use super::{fixed_point, inactive_g, FixedPointOptions, FixedPointResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdsrSource {
    Analytic,
    Simulated,
}

impl fmt::Display for EdsrSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdsrSource::Analytic => "analytic",
            EdsrSource::Simulated => "simulated",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmsRaceRound {
    pub round: usize,
    pub jammer: JammerStrategy,
    pub policy: StayingPolicy,
    pub theta: f64,
    pub edsr: f64,
    pub stderr: f64,
    pub source: EdsrSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmsRaceOptions {
    pub fixed_point: FixedPointOptions,
    /// Used for rounds without a closed-form kernel.
    pub sim: SimOptions,
    pub initial: StayingPolicy,
}

impl ArmsRaceOptions {
    pub fn new(rewards: &RewardParams) -> Self {
        Self {
            fixed_point: FixedPointOptions::new(rewards),
            sim: SimOptions::new(10_000, rewards),
            initial: StayingPolicy::Threshold(0),
        }
    }
}

/// EDSR of `policy` against `jammer`, analytic when the visited kernel
/// rows are known. With several users the analytic value uses the
/// simulated theta, and its standard error is the theta standard error
/// pushed through a central difference.
#[allow(clippy::too_many_arguments)]
fn play(
    round: usize,
    jammer: JammerStrategy,
    policy: StayingPolicy,
    config: &NetworkConfig,
    rewards: &RewardParams,
    protocol: CollisionProtocol,
    opts: &ArmsRaceOptions,
    seed: u64,
) -> Result<ArmsRaceRound> {
    let fp = &opts.fixed_point;
    let est: ThetaEstimate = inactive_g(policy, config, jammer, protocol, fp.theta_halfwidth, fp.warmup, seed)?;
    let analytic = |theta: f64| -> Result<f64> {
        let kernel = TransitionKernel::closed_form(config, jammer, theta)?;
        edsr(&MdpModel::new(kernel, *rewards)?, &policy)
    };
    match analytic(est.theta) {
        Ok(value) => {
            let stderr = if config.users() == 1 {
                0.0
            } else {
                let se_theta = (est.ci.1 - est.ci.0) / (2.0 * Z95);
                let delta = 1e-4;
                let (lo, hi) = ((est.theta - delta).max(0.0), (est.theta + delta).min(1.0));
                let slope = (analytic(hi)? - analytic(lo)?) / (hi - lo);
                slope.abs() * se_theta
            };
            Ok(ArmsRaceRound {
                round,
                jammer,
                policy,
                theta: est.theta,
                edsr: value,
                stderr,
                source: EdsrSource::Analytic,
            })
        }
        Err(Error::MissingRow { .. } | Error::NoClosedForm { .. }) => {
            let scenario = Scenario::new(*config, jammer, protocol, policy);
            let sim = run_episodes(&scenario, rewards, &opts.sim, seed)?;
            Ok(ArmsRaceRound {
                round,
                jammer,
                policy,
                theta: sim.theta_hat,
                edsr: sim.edsr_estimate,
                stderr: sim.edsr_stderr,
                source: EdsrSource::Simulated,
            })
        }
        Err(e) => Err(e),
    }
}

/// The canonical four rounds: random jamming against minimal hopping, the
/// sweep against minimal hopping, the sweep against the fixed-point
/// threshold K*, and K*-memory jamming against K*.
pub fn arms_race(
    config: &NetworkConfig,
    rewards: &RewardParams,
    protocol: CollisionProtocol,
    opts: &ArmsRaceOptions,
    seed: u64,
) -> Result<(Vec<ArmsRaceRound>, FixedPointResult)> {
    let sweep = JammerStrategy::BasicSweep;
    let fp = fixed_point(opts.initial, config, rewards, sweep, protocol, &opts.fixed_point, seed)?;
    let k_star = fp.policy;
    let memory = JammerStrategy::Memory(k_star.threshold().unwrap_or(config.period() - 1));
    let schedule = [
        (JammerStrategy::RANDOM, StayingPolicy::Minimal),
        (sweep, StayingPolicy::Minimal),
        (sweep, k_star),
        (memory, k_star),
    ];
    let rounds = schedule
        .iter()
        .enumerate()
        .map(|(i, &(jammer, policy))| play(i + 1, jammer, policy, config, rewards, protocol, opts, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok((rounds, fp))
}

pub const ROUND_LOG_HEADER: &str = "round,jammer,K,theta,edsr,stderr,source";

pub fn write_round_log<W: Write>(rounds: &[ArmsRaceRound], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{ROUND_LOG_HEADER}")?;
    for r in rounds {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.round,
            r.jammer,
            r.policy,
            sig(r.theta),
            sig(r.edsr),
            sig(r.stderr),
            r.source
        )?;
    }
    Ok(())
}
