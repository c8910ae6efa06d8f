use crate::error::{Error, Result};
use crate::jammers::JammerStrategy;
use crate::params::NetworkConfig;

use super::state::{Action, StateSpace, StreakTail, UserState};

/// Streak cap, as a multiple of the sweep period, for jammers that do not
/// bound streaks. For gamma = 0.9 the discounted weight beyond 4T slots is
/// below 1e-2 of the total.
pub const TRUNCATION_PERIODS: usize = 4;

/// Tolerance on row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Outcome distribution after a hop; it does not depend on the source state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopRow {
    pub jammed: f64,
    pub inactive: f64,
    /// Lands alone, is not jammed and starts a streak of 1.
    pub fresh: f64,
}

impl HopRow {
    /// `(1 - theta) m/M` jammed, `theta` inactive, the rest fresh.
    pub fn uniform(config: &NetworkConfig, theta: f64) -> Self {
        let jam = config.scan_fraction();
        Self {
            jammed: (1.0 - theta) * jam,
            inactive: theta,
            fresh: (1.0 - theta) * (1.0 - jam),
        }
    }

    pub fn entries(&self) -> [(UserState, f64); 3] {
        [
            (UserState::Jammed, self.jammed),
            (UserState::Inactive, self.inactive),
            (UserState::Streak(1), self.fresh),
        ]
    }
}

/// Streak cap and tail semantics the simulator and the kernels share for a
/// given jammer.
pub fn streak_layout(config: &NetworkConfig, jammer: JammerStrategy) -> (usize, StreakTail) {
    let t = config.period();
    let sweeps_everything = match jammer {
        JammerStrategy::BasicSweep => true,
        JammerStrategy::Memory(g) => g + 1 == t,
        // Only the lone user can trigger a reset, and a reset means it was jammed.
        JammerStrategy::ReactiveSweep => config.users() == 1,
    };
    if sweeps_everything {
        (t - 1, StreakTail::Absorbing)
    } else {
        (TRUNCATION_PERIODS * t, StreakTail::Looped)
    }
}

/// Per-user transition kernel p(S'|S, A).
///
/// Hop rows are shared by every source state. A stay from streak `k` ends
/// either jammed or at the next streak (the same streak at a looped tail).
/// Rows with no closed form are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    config: NetworkConfig,
    space: StateSpace,
    hop: HopRow,
    stay_jam: Vec<Option<f64>>,
}

fn check_theta(config: &NetworkConfig, theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid("theta", format!("must lie in [0, 1], got {theta}")));
    }
    if config.users() == 1 && theta > 0.0 {
        return Err(Error::invalid(
            "theta",
            "a single user is never inactive; theta must be 0",
        ));
    }
    Ok(())
}

fn check_prob(field: &'static str, p: f64) -> Result<()> {
    if (-ROW_SUM_TOL..=1.0 + ROW_SUM_TOL).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{p} is not a probability")))
    }
}

impl TransitionKernel {
    /// Exact kernel against a sweep: the jammer has already covered `k m`
    /// other channels during a streak of `k`, so the next scan hits the
    /// user's channel with probability `m / (M - k m)`; at `T - 1` the hit
    /// is certain.
    pub fn sweep(config: &NetworkConfig, theta: f64) -> Result<Self> {
        check_theta(config, theta)?;
        let t = config.period();
        let (m, big_m) = (config.scan_width() as f64, config.channels() as f64);
        let stay_jam = (1..t)
            .map(|k| {
                if k + 1 == t {
                    Some(1.0)
                } else {
                    Some(m / (big_m - k as f64 * m))
                }
            })
            .collect();
        Ok(Self {
            config: *config,
            space: StateSpace::new(config.users() > 1, t - 1, StreakTail::Absorbing),
            hop: HopRow::uniform(config, theta),
            stay_jam,
        })
    }

    /// Random jamming: every scan is a fresh uniform subset, so every row
    /// jams with probability m/M.
    pub fn memoryless(config: &NetworkConfig, theta: f64) -> Result<Self> {
        check_theta(config, theta)?;
        let cap = TRUNCATION_PERIODS * config.period();
        Ok(Self {
            config: *config,
            space: StateSpace::new(config.users() > 1, cap, StreakTail::Looped),
            hop: HopRow::uniform(config, theta),
            stay_jam: vec![Some(config.scan_fraction()); cap],
        })
    }

    /// G-memory jamming. Scans within any G + 1 consecutive slots are
    /// disjoint, so streaks up to G see the same rows as a sweep; longer
    /// streaks depend on older history and are left unknown.
    pub fn memory(config: &NetworkConfig, memory: usize, theta: f64) -> Result<Self> {
        let t = config.period();
        if memory >= t {
            return Err(Error::invalid(
                "jammer.memory",
                format!("must be below the period {t}, got {memory}"),
            ));
        }
        if memory == 0 {
            return Self::memoryless(config, theta);
        }
        if memory + 1 == t {
            return Self::sweep(config, theta);
        }
        check_theta(config, theta)?;
        let sweep = Self::sweep(config, theta)?;
        let cap = TRUNCATION_PERIODS * t;
        let stay_jam = (1..=cap)
            .map(|k| if k <= memory { sweep.stay_jam[k - 1] } else { None })
            .collect();
        Ok(Self {
            config: *config,
            space: StateSpace::new(config.users() > 1, cap, StreakTail::Looped),
            hop: sweep.hop,
            stay_jam,
        })
    }

    /// Kernel for `jammer` where one is known in closed form.
    pub fn closed_form(config: &NetworkConfig, jammer: JammerStrategy, theta: f64) -> Result<Self> {
        match jammer {
            JammerStrategy::BasicSweep => Self::sweep(config, theta),
            JammerStrategy::Memory(g) => Self::memory(config, g, theta),
            JammerStrategy::ReactiveSweep if config.users() == 1 => Self::sweep(config, theta),
            JammerStrategy::ReactiveSweep => Err(Error::NoClosedForm {
                jammer: jammer.to_string(),
                users: config.users(),
            }),
        }
    }

    /// Assembles a kernel from estimated rows, checking that every row is a
    /// distribution.
    pub fn from_rows(
        config: &NetworkConfig,
        space: StateSpace,
        hop: HopRow,
        stay_jam: Vec<Option<f64>>,
    ) -> Result<Self> {
        if stay_jam.len() != space.max_streak() {
            return Err(Error::invalid(
                "kernel",
                format!("{} stay rows for {} streak states", stay_jam.len(), space.max_streak()),
            ));
        }
        if !space.has_inactive() && hop.inactive != 0.0 {
            return Err(Error::invalid("theta", "inactive mass without an inactive state"));
        }
        for p in [hop.jammed, hop.inactive, hop.fresh] {
            check_prob("kernel.hop", p)?;
        }
        let sum = hop.jammed + hop.inactive + hop.fresh;
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid("kernel.hop", format!("row sums to {sum}")));
        }
        for p in stay_jam.iter().flatten() {
            check_prob("kernel.stay", *p)?;
        }
        if space.tail() == StreakTail::Absorbing {
            if let Some(Some(p)) = stay_jam.last() {
                if (p - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::invalid(
                        "kernel.stay",
                        "an absorbing tail must jam the last streak with certainty",
                    ));
                }
            }
        }
        Ok(Self {
            config: *config,
            space,
            hop,
            stay_jam,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn max_streak(&self) -> usize {
        self.space.max_streak()
    }

    pub fn theta(&self) -> f64 {
        self.hop.inactive
    }

    pub fn hop_row(&self) -> HopRow {
        self.hop
    }

    /// p(J | k, s), if known.
    pub fn stay_jam(&self, streak: usize) -> Option<f64> {
        self.stay_jam.get(streak.checked_sub(1)?).copied().flatten()
    }

    /// Streak reached by a successful stay at `streak`.
    pub fn stay_successor(&self, streak: usize) -> usize {
        (streak + 1).min(self.space.max_streak())
    }

    /// Nonzero-structure of p(.|state, action).
    pub fn row(&self, state: UserState, action: Action) -> Result<Vec<(UserState, f64)>> {
        if self.space.index(state).is_none() {
            return Err(Error::invalid("state", format!("{state} is outside the state space")));
        }
        if !action.allowed_in(state) {
            return Err(Error::ForbiddenAction { state, action });
        }
        match (state, action) {
            (_, Action::Hop) => Ok(self
                .hop
                .entries()
                .into_iter()
                .filter(|(s, _)| self.space.index(*s).is_some())
                .collect()),
            (UserState::Streak(k), Action::Stay) => {
                let jam = self.stay_jam(k).ok_or(Error::MissingRow { state, action })?;
                let mut row = vec![(UserState::Jammed, jam)];
                let at_tail = k == self.space.max_streak();
                if !(at_tail && self.space.tail() == StreakTail::Absorbing) {
                    row.push((UserState::Streak(self.stay_successor(k)), 1.0 - jam));
                }
                Ok(row)
            }
            _ => unreachable!("stay is only allowed on streak states"),
        }
    }

    /// Every (state, action) pair whose row is known.
    pub fn known_pairs(&self) -> Vec<(UserState, Action)> {
        let mut pairs = Vec::new();
        for state in self.space.states() {
            pairs.push((state, Action::Hop));
            if let UserState::Streak(k) = state {
                if self.stay_jam(k).is_some() {
                    pairs.push((state, Action::Stay));
                }
            }
        }
        pairs
    }
}

/// Exact kernel against the basic sweep with inactive probability `theta`.
pub fn sweep_kernel(config: &NetworkConfig, theta: f64) -> Result<TransitionKernel> {
    TransitionKernel::sweep(config, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(n: usize) -> NetworkConfig {
        NetworkConfig::new(60, 5, n).unwrap()
    }

    fn prob(row: &[(UserState, f64)], s: UserState) -> f64 {
        row.iter().filter(|(t, _)| *t == s).map(|(_, p)| p).sum()
    }

    #[test]
    fn single_user_sweep_rows() {
        let k = sweep_kernel(&net(1), 0.0).unwrap();
        assert_eq!(k.max_streak(), 11);
        let hop = k.row(UserState::Streak(4), Action::Hop).unwrap();
        assert_eq!(prob(&hop, UserState::Jammed), 1.0 / 12.0);
        assert_eq!(prob(&hop, UserState::Streak(1)), 11.0 / 12.0);
        assert_eq!(prob(&hop, UserState::Inactive), 0.0);
        let stay = k.row(UserState::Streak(1), Action::Stay).unwrap();
        assert!((prob(&stay, UserState::Jammed) - 5.0 / 55.0).abs() < 1e-15);
        assert!((prob(&stay, UserState::Streak(2)) - 50.0 / 55.0).abs() < 1e-15);
        let last = k.row(UserState::Streak(11), Action::Stay).unwrap();
        assert_eq!(last, vec![(UserState::Jammed, 1.0)]);
    }

    #[test]
    fn multi_user_hop_row() {
        let k = sweep_kernel(&net(4), 0.1).unwrap();
        let hop = k.row(UserState::Inactive, Action::Hop).unwrap();
        assert_eq!(prob(&hop, UserState::Inactive), 0.1);
        assert!((prob(&hop, UserState::Jammed) - 0.9 / 12.0).abs() < 1e-15);
        assert!((prob(&hop, UserState::Streak(1)) - 0.9 * 11.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn theta_validation() {
        assert!(sweep_kernel(&net(1), 0.1).is_err());
        assert!(sweep_kernel(&net(3), 1.5).is_err());
        assert!(sweep_kernel(&net(3), -0.1).is_err());
    }

    #[test]
    fn rows_sum_to_one() {
        for kernel in [
            sweep_kernel(&net(1), 0.0).unwrap(),
            sweep_kernel(&net(5), 0.3).unwrap(),
            TransitionKernel::memoryless(&net(2), 0.2).unwrap(),
            TransitionKernel::memory(&net(1), 4, 0.0).unwrap(),
        ] {
            for (state, action) in kernel.known_pairs() {
                let sum: f64 = kernel.row(state, action).unwrap().iter().map(|(_, p)| p).sum();
                assert!((sum - 1.0).abs() <= ROW_SUM_TOL, "{state},{action}: {sum}");
            }
        }
    }

    #[test]
    fn memory_kernel_shares_sweep_rows_up_to_memory() {
        let sweep = sweep_kernel(&net(1), 0.0).unwrap();
        let mem = TransitionKernel::memory(&net(1), 5, 0.0).unwrap();
        for k in 1..=5 {
            assert_eq!(mem.stay_jam(k), sweep.stay_jam(k));
        }
        assert_eq!(mem.stay_jam(6), None);
        assert!(matches!(
            mem.row(UserState::Streak(6), Action::Stay),
            Err(Error::MissingRow { .. })
        ));
        assert_eq!(mem.hop_row(), sweep.hop_row());
    }

    #[test]
    fn layout_per_jammer() {
        let one = net(1);
        let many = net(3);
        assert_eq!(streak_layout(&one, JammerStrategy::BasicSweep), (11, StreakTail::Absorbing));
        assert_eq!(streak_layout(&one, JammerStrategy::Memory(11)), (11, StreakTail::Absorbing));
        assert_eq!(streak_layout(&one, JammerStrategy::ReactiveSweep), (11, StreakTail::Absorbing));
        assert_eq!(streak_layout(&many, JammerStrategy::ReactiveSweep), (48, StreakTail::Looped));
        assert_eq!(streak_layout(&one, JammerStrategy::Memory(0)), (48, StreakTail::Looped));
        assert!(TransitionKernel::closed_form(&many, JammerStrategy::ReactiveSweep, 0.1).is_err());
    }

    #[test]
    fn stay_is_forbidden_after_jam() {
        let k = sweep_kernel(&net(2), 0.0).unwrap();
        assert!(matches!(
            k.row(UserState::Jammed, Action::Stay),
            Err(Error::ForbiddenAction { .. })
        ));
    }
}
