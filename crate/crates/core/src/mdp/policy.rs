use std::fmt;
use std::str::FromStr;

use super::state::{Action, UserState};

/// Hop after a jam or a lost channel; after a success, stay while the
/// streak is at most the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StayingPolicy {
    Threshold(usize),
    /// Stay until jammed or displaced (infinite threshold).
    Minimal,
}

impl StayingPolicy {
    pub fn action(&self, state: UserState) -> Action {
        match state {
            UserState::Streak(k) if self.stays_at(k) => Action::Stay,
            _ => Action::Hop,
        }
    }

    pub fn stays_at(&self, streak: usize) -> bool {
        match *self {
            StayingPolicy::Threshold(k) => streak <= k,
            StayingPolicy::Minimal => true,
        }
    }

    pub fn threshold(&self) -> Option<usize> {
        match *self {
            StayingPolicy::Threshold(k) => Some(k),
            StayingPolicy::Minimal => None,
        }
    }

    /// Sort key that places the minimal policy after every finite threshold.
    pub fn order_key(&self) -> usize {
        self.threshold().unwrap_or(usize::MAX)
    }

    /// Every finite threshold below `period`, then the minimal policy.
    pub fn candidates(period: usize) -> Vec<StayingPolicy> {
        (0..period)
            .map(StayingPolicy::Threshold)
            .chain(std::iter::once(StayingPolicy::Minimal))
            .collect()
    }
}

impl fmt::Display for StayingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StayingPolicy::Threshold(k) => write!(f, "{k}"),
            StayingPolicy::Minimal => f.write_str("inf"),
        }
    }
}

impl FromStr for StayingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "minimal" | "∞" => Ok(StayingPolicy::Minimal),
            other => other
                .parse()
                .map(StayingPolicy::Threshold)
                .map_err(|_| format!("expected a threshold or `inf`, got `{other}`")),
        }
    }
}
