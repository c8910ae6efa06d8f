use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{Action, HopRow, StateSpace, StayingPolicy, TransitionKernel, UserState};
use crate::rng::split_seed;

use super::world::{Scenario, World};

/// Smallest sampling budget accepted by [`empirical_kernel`].
pub const MIN_SAMPLES: u64 = 10_000;

/// Visits an estimated row needs before it is trusted.
pub const MIN_ROW_VISITS: u64 = 200;

/// Independent worlds used when collecting transitions.
const WORLDS: u64 = 8;

/// Visit and transition tallies over (state, action) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCounts {
    space: StateSpace,
    visits: Vec<[u64; 2]>,
    /// Hop successors: jammed, inactive, fresh.
    hop: [u64; 3],
    /// Stay successors per streak: jammed, survived.
    stay: Vec<[u64; 2]>,
}

fn action_index(action: Action) -> usize {
    match action {
        Action::Stay => 0,
        Action::Hop => 1,
    }
}

impl TransitionCounts {
    pub fn new(space: StateSpace) -> Self {
        Self {
            space,
            visits: vec![[0; 2]; space.len()],
            hop: [0; 3],
            stay: vec![[0; 2]; space.max_streak()],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn record_visit(&mut self, state: UserState, action: Action) {
        let i = self.space.index(state).expect("state outside the space");
        self.visits[i][action_index(action)] += 1;
    }

    pub fn record_transition(&mut self, from: UserState, action: Action, to: UserState) {
        match (from, action) {
            (_, Action::Hop) => {
                let slot = match to {
                    UserState::Jammed => 0,
                    UserState::Inactive => 1,
                    UserState::Streak(_) => 2,
                };
                self.hop[slot] += 1;
            }
            (UserState::Streak(k), Action::Stay) => {
                assert!(to != UserState::Inactive, "a staying occupant became inactive");
                let slot = usize::from(to != UserState::Jammed);
                self.stay[k - 1][slot] += 1;
            }
            _ => panic!("stay recorded in state {from}"),
        }
    }

    pub fn merge(&mut self, other: &TransitionCounts) {
        assert_eq!(self.space, other.space);
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            a[0] += b[0];
            a[1] += b[1];
        }
        for (a, b) in self.hop.iter_mut().zip(&other.hop) {
            *a += b;
        }
        for (a, b) in self.stay.iter_mut().zip(&other.stay) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }

    pub fn visits(&self, state: UserState, action: Action) -> u64 {
        self.space
            .index(state)
            .map_or(0, |i| self.visits[i][action_index(action)])
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().map(|v| v[0] + v[1]).sum()
    }

    /// Nonzero visit counts in state order.
    pub fn visit_table(&self) -> Vec<(UserState, Action, u64)> {
        let mut out = Vec::new();
        for state in self.space.states() {
            for action in [Action::Stay, Action::Hop] {
                let v = self.visits(state, action);
                if v > 0 {
                    out.push((state, action, v));
                }
            }
        }
        out
    }

    /// Observed hop successors (jammed, inactive, fresh).
    pub fn hop_counts(&self) -> [u64; 3] {
        self.hop
    }

    /// Observed stay successors at `streak` (jammed, survived).
    pub fn stay_counts(&self, streak: usize) -> [u64; 2] {
        self.stay[streak - 1]
    }
}

/// Runs `WORLDS` independent worlds past `warmup` until about `samples`
/// user-slot transitions have been recorded.
pub fn collect_transitions(scenario: &Scenario, samples: u64, warmup: usize, seed: u64) -> Result<TransitionCounts> {
    scenario.validate()?;
    let users = scenario.config.users() as u64;
    let per_world = samples.div_ceil(WORLDS * users);
    let parts = (0..WORLDS)
        .into_par_iter()
        .map(|w| {
            let mut world = World::new(*scenario, split_seed(seed, w))?;
            let mut counts = TransitionCounts::new(*world.space());
            for _ in 0..warmup {
                world.step();
            }
            let mut prev: Vec<_> = world.step().users.iter().map(|u| (u.state, u.action)).collect();
            for _ in 0..per_world {
                let rec = world.step();
                for (p, u) in prev.iter_mut().zip(&rec.users) {
                    counts.record_visit(p.0, p.1);
                    counts.record_transition(p.0, p.1, u.state);
                    *p = (u.state, u.action);
                }
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = TransitionCounts::new(scenario.state_space());
    for part in &parts {
        total.merge(part);
    }
    Ok(total)
}

/// Kernel estimated from simulation together with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalKernel {
    pub kernel: TransitionKernel,
    /// Standard errors of the hop row (jammed, inactive, fresh).
    pub hop_stderr: [f64; 3],
    /// Standard error of p(J | k, s) for each estimated streak.
    pub stay_stderr: Vec<Option<f64>>,
    pub counts: TransitionCounts,
}

fn proportion(hits: u64, total: u64) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

/// Estimates the rows visited by `scenario.policy` from about `samples`
/// simulated transitions. Hop rows are pooled over source states since they
/// share one distribution.
pub fn empirical_kernel(scenario: &Scenario, samples: u64, warmup: usize, seed: u64) -> Result<EmpiricalKernel> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "samples",
            format!("at least {MIN_SAMPLES} samples are required, got {samples}"),
        ));
    }
    let counts = collect_transitions(scenario, samples, warmup, seed)?;
    let space = *counts.space();

    let [jam, idle, fresh] = counts.hop;
    let hops = jam + idle + fresh;
    if hops < MIN_ROW_VISITS {
        return Err(Error::StarvedRow {
            state: UserState::Jammed,
            action: Action::Hop,
            visits: hops,
            required: MIN_ROW_VISITS,
        });
    }
    let (p_jam, se_jam) = proportion(jam, hops);
    let (p_idle, se_idle) = proportion(idle, hops);
    let se_fresh = proportion(fresh, hops).1;
    let hop = HopRow {
        jammed: p_jam,
        inactive: p_idle,
        fresh: 1.0 - p_jam - p_idle,
    };

    let last = match scenario.policy {
        StayingPolicy::Threshold(k) => k.min(space.max_streak()),
        StayingPolicy::Minimal => space.max_streak(),
    };
    let mut stay_jam = vec![None; space.max_streak()];
    let mut stay_stderr = vec![None; space.max_streak()];
    for k in 1..=last {
        let [hit, ok] = counts.stay_counts(k);
        if hit + ok < MIN_ROW_VISITS {
            return Err(Error::StarvedRow {
                state: UserState::Streak(k),
                action: Action::Stay,
                visits: hit + ok,
                required: MIN_ROW_VISITS,
            });
        }
        let (p, se) = proportion(hit, hit + ok);
        stay_jam[k - 1] = Some(p);
        stay_stderr[k - 1] = Some(se);
    }
    let kernel = TransitionKernel::from_rows(&scenario.config, space, hop, stay_jam)?;
    Ok(EmpiricalKernel {
        kernel,
        hop_stderr: [se_jam, se_idle, se_fresh],
        stay_stderr,
        counts,
    })
}
