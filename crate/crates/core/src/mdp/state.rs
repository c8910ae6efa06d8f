use std::fmt;

use crate::error::{Error, Result};
use crate::params::RewardParams;

/// What a user observed at the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserState {
    /// Tried to communicate and was jammed.
    Jammed,
    /// Lost the channel to an occupant or to collision avoidance.
    Inactive,
    /// `k` consecutive successful slots on the current channel.
    Streak(usize),
}

impl fmt::Display for UserState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserState::Jammed => f.write_str("J"),
            UserState::Inactive => f.write_str("I"),
            UserState::Streak(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Stay,
    Hop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Stay => "s",
            Action::Hop => "h",
        })
    }
}

impl Action {
    pub fn allowed_in(self, state: UserState) -> bool {
        self == Action::Hop || matches!(state, UserState::Streak(_))
    }
}

/// How the last streak state behaves under the stay action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreakTail {
    /// The jammer covers every channel within `max_streak + 1` slots, so
    /// staying at the last streak is jammed with certainty.
    Absorbing,
    /// Streaks are unbounded; the last state stands for every streak at or
    /// beyond it and a successful stay keeps the user there.
    Looped,
}

/// Index layout `J, [I], 1, 2, ..., K_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    has_inactive: bool,
    max_streak: usize,
    tail: StreakTail,
}

impl StateSpace {
    pub fn new(has_inactive: bool, max_streak: usize, tail: StreakTail) -> Self {
        assert!(max_streak >= 1, "at least one streak state is required");
        Self {
            has_inactive,
            max_streak,
            tail,
        }
    }

    pub fn has_inactive(&self) -> bool {
        self.has_inactive
    }

    pub fn max_streak(&self) -> usize {
        self.max_streak
    }

    pub fn tail(&self) -> StreakTail {
        self.tail
    }

    pub fn len(&self) -> usize {
        1 + usize::from(self.has_inactive) + self.max_streak
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn streak_base(&self) -> usize {
        1 + usize::from(self.has_inactive)
    }

    pub fn index(&self, state: UserState) -> Option<usize> {
        match state {
            UserState::Jammed => Some(0),
            UserState::Inactive => self.has_inactive.then_some(1),
            UserState::Streak(k) if (1..=self.max_streak).contains(&k) => {
                Some(self.streak_base() + k - 1)
            }
            UserState::Streak(_) => None,
        }
    }

    pub fn state(&self, index: usize) -> UserState {
        let base = self.streak_base();
        match index {
            0 => UserState::Jammed,
            1 if self.has_inactive => UserState::Inactive,
            i if i >= base && i - base < self.max_streak => UserState::Streak(i - base + 1),
            _ => panic!("state index {index} out of range"),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = UserState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    /// Label for an observed streak: streaks beyond the cap share the last state.
    pub fn streak_state(&self, streak: usize) -> UserState {
        UserState::Streak(streak.clamp(1, self.max_streak))
    }
}

/// Immediate reward of taking `action` in `state`.
pub fn reward(state: UserState, action: Action, params: &RewardParams) -> Result<f64> {
    match (state, action) {
        (UserState::Streak(_), Action::Stay) => Ok(params.reward),
        (UserState::Streak(_), Action::Hop) => Ok(params.reward - params.hop_cost),
        (UserState::Jammed, Action::Hop) => Ok(-params.jam_loss - params.hop_cost),
        (UserState::Inactive, Action::Hop) => Ok(-params.hop_cost),
        (state, action) => Err(Error::ForbiddenAction { state, action }),
    }
}
