use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{reward, Action, UserState};
use crate::params::RewardParams;
use crate::rng::split_seed;
use crate::stats::{mean_stderr, wilson_interval, Z95};

use super::empirical::TransitionCounts;
use super::world::{Scenario, World};

/// Largest discounted tail the horizon may leave out.
pub const HORIZON_TAIL_BOUND: f64 = 1e-4;

/// Default warm-up, in slots.
pub const DEFAULT_WARMUP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub episodes: usize,
    pub horizon: usize,
    pub warmup: usize,
}

impl SimOptions {
    /// `episodes` with the shortest admissible horizon and the default warm-up.
    pub fn new(episodes: usize, rewards: &RewardParams) -> Self {
        Self {
            episodes,
            horizon: rewards.min_horizon(HORIZON_TAIL_BOUND),
            warmup: DEFAULT_WARMUP,
        }
    }

    pub fn validate(&self, rewards: &RewardParams) -> Result<()> {
        if self.episodes < 2 {
            return Err(Error::invalid("sim.episodes", "at least 2 episodes are required"));
        }
        let tail = rewards.gamma.powi(self.horizon as i32) * rewards.max_abs_reward() / (1.0 - rewards.gamma);
        if self.horizon == 0 || tail >= HORIZON_TAIL_BOUND {
            return Err(Error::invalid(
                "sim.horizon",
                format!(
                    "horizon {} leaves a discounted tail of {tail:.3e}; at least {} is required",
                    self.horizon,
                    rewards.min_horizon(HORIZON_TAIL_BOUND)
                ),
            ));
        }
        Ok(())
    }
}

/// Measurements from a batch of episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub edsr_estimate: f64,
    pub edsr_stderr: f64,
    /// Fraction of measured hops that ended inactive.
    pub theta_hat: f64,
    pub theta_ci: (f64, f64),
    pub hop_events: u64,
    pub inactive_events: u64,
    /// Per-(state, action) visits of every user after warm-up.
    pub visits: Vec<(UserState, Action, u64)>,
    pub counts: TransitionCounts,
    /// Post-warm-up slots summed over episodes.
    pub slots: u64,
    /// Discounted return of each episode, averaged over its measured users.
    pub episode_values: Vec<f64>,
    pub seed: u64,
}

enum Tag {
    Waiting,
    Active { t: usize, discount: f64, total: f64 },
    Done(f64),
}

struct Episode {
    value: f64,
    hops: u64,
    inactive: u64,
    slots: u64,
    counts: TransitionCounts,
}

fn run_one(scenario: &Scenario, rewards: &RewardParams, opts: &SimOptions, seed: u64) -> Result<Episode> {
    let mut world = World::new(*scenario, seed)?;
    let measured = scenario.measured_users();
    let mut counts = TransitionCounts::new(*world.space());
    let mut tags: Vec<Tag> = measured.clone().map(|_| Tag::Waiting).collect();
    let mut prev: Vec<Option<(UserState, Action)>> = vec![None; scenario.config.users()];
    let (mut hops, mut inactive, mut slots) = (0u64, 0u64, 0u64);
    let mut pending = tags.len();

    for _ in 0..opts.warmup {
        world.step();
    }
    while pending > 0 {
        let rec = world.step();
        slots += 1;
        for (id, u) in rec.users.iter().enumerate() {
            counts.record_visit(u.state, u.action);
            if let Some((s, a)) = prev[id] {
                counts.record_transition(s, a, u.state);
                if a == Action::Hop && measured.contains(&id) {
                    hops += 1;
                    inactive += u64::from(u.state == UserState::Inactive);
                }
            }
            prev[id] = Some((u.state, u.action));
        }
        for (tag, id) in tags.iter_mut().zip(measured.clone()) {
            let u = &rec.users[id];
            match tag {
                Tag::Waiting => {
                    if u.action == Action::Hop {
                        *tag = Tag::Active {
                            t: 0,
                            discount: 1.0,
                            total: 0.0,
                        };
                    }
                }
                Tag::Active { t, discount, total } => {
                    *total += *discount * reward(u.state, u.action, rewards)?;
                    *discount *= rewards.gamma;
                    *t += 1;
                    if *t == opts.horizon {
                        *tag = Tag::Done(*total);
                        pending -= 1;
                    }
                }
                Tag::Done(_) => {}
            }
        }
    }
    let values: Vec<f64> = tags
        .iter()
        .map(|t| match t {
            Tag::Done(v) => *v,
            _ => unreachable!(),
        })
        .collect();
    Ok(Episode {
        value: values.iter().sum::<f64>() / values.len() as f64,
        hops,
        inactive,
        slots,
        counts,
    })
}

/// Estimates the EDSR of `scenario` by simulation.
///
/// Each episode warms the network for `warmup` slots, then tags every
/// measured user at its next hop and accumulates `horizon` discounted
/// rewards from the slot after that hop. Episode `e` uses seed
/// `split_seed(seed, e)`, so the same episode sees the same jammer and
/// user streams whatever policy the users run.
pub fn run_episodes(scenario: &Scenario, rewards: &RewardParams, opts: &SimOptions, seed: u64) -> Result<SimMetrics> {
    rewards.validate()?;
    opts.validate(rewards)?;
    scenario.validate()?;
    let episodes = (0..opts.episodes as u64)
        .into_par_iter()
        .map(|e| run_one(scenario, rewards, opts, split_seed(seed, e)))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = TransitionCounts::new(scenario.state_space());
    let (mut hops, mut inactive, mut slots) = (0, 0, 0);
    let mut values = Vec::with_capacity(episodes.len());
    for ep in &episodes {
        counts.merge(&ep.counts);
        hops += ep.hops;
        inactive += ep.inactive;
        slots += ep.slots;
        values.push(ep.value);
    }
    let (edsr_estimate, edsr_stderr) = mean_stderr(&values);
    let theta_hat = if hops == 0 { 0.0 } else { inactive as f64 / hops as f64 };
    Ok(SimMetrics {
        edsr_estimate,
        edsr_stderr,
        theta_hat,
        theta_ci: wilson_interval(inactive, hops, Z95),
        hop_events: hops,
        inactive_events: inactive,
        visits: counts.visit_table(),
        counts,
        slots,
        episode_values: values,
        seed,
    })
}
