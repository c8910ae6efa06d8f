use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{Action, UserState};
use crate::rng::split_seed;
use crate::stats::{wilson_interval, Z95};

use super::world::{Scenario, World};

pub const DEFAULT_THETA_HALFWIDTH: f64 = 0.002;

/// Hop events after which estimation gives up.
pub const HOP_SAMPLE_CAP: u64 = 100_000_000;

const WORLDS: u64 = 8;
const ROUND_SLOTS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEstimate {
    pub theta: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
    pub hops: u64,
    pub inactive: u64,
}

impl ThetaEstimate {
    pub fn halfwidth(&self) -> f64 {
        (self.ci.1 - self.ci.0) / 2.0
    }
}

/// Estimates the probability that a measured user's hop ends inactive.
///
/// `WORLDS` steady-state worlds advance in lockstep rounds; after each round
/// the pooled counts are checked against the target half-width. A single
/// user is never inactive, so that case returns 0 without simulating.
pub fn estimate_theta(scenario: &Scenario, target_halfwidth: f64, warmup: usize, seed: u64) -> Result<ThetaEstimate> {
    if target_halfwidth.is_nan() || target_halfwidth <= 0.0 {
        return Err(Error::invalid(
            "sim.theta_halfwidth",
            format!("must be positive, got {target_halfwidth}"),
        ));
    }
    scenario.validate()?;
    if scenario.config.users() == 1 {
        return Ok(ThetaEstimate {
            theta: 0.0,
            ci: (0.0, 0.0),
            hops: 0,
            inactive: 0,
        });
    }
    let measured = scenario.measured_users();
    let mut worlds = (0..WORLDS)
        .map(|w| {
            let mut world = World::new(*scenario, split_seed(seed, w))?;
            for _ in 0..warmup {
                world.step();
            }
            let hopping: Vec<bool> = world.agents().iter().map(|a| a.next == Action::Hop).collect();
            Ok((world, hopping))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut hops, mut inactive) = (0u64, 0u64);
    loop {
        let tallies: Vec<(u64, u64)> = worlds
            .par_iter_mut()
            .map(|(world, hopping)| {
                let (mut h, mut i) = (0, 0);
                for _ in 0..ROUND_SLOTS {
                    let rec = world.step();
                    for id in measured.clone() {
                        let u = &rec.users[id];
                        if hopping[id] {
                            h += 1;
                            i += u64::from(u.state == UserState::Inactive);
                        }
                        hopping[id] = u.action == Action::Hop;
                    }
                }
                (h, i)
            })
            .collect();
        for (h, i) in tallies {
            hops += h;
            inactive += i;
        }
        let ci = wilson_interval(inactive, hops, Z95);
        if (ci.1 - ci.0) / 2.0 <= target_halfwidth {
            return Ok(ThetaEstimate {
                theta: inactive as f64 / hops as f64,
                ci,
                hops,
                inactive,
            });
        }
        if hops >= HOP_SAMPLE_CAP {
            return Err(Error::SampleCap { cap: HOP_SAMPLE_CAP });
        }
    }
}
