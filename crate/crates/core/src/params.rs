use std::fmt;

use crate::error::{Error, Result};

/// Channel, scan and user counts of a multi-band network.
///
/// `channels` (M) must be a multiple of `scan_width` (m) with m < M, so a
/// sweeping jammer covers the whole band in exactly `period()` (T = M/m) slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetworkConfig {
    channels: usize,
    scan_width: usize,
    users: usize,
}

impl NetworkConfig {
    pub fn new(channels: usize, scan_width: usize, users: usize) -> Result<Self> {
        if scan_width == 0 {
            return Err(Error::invalid("network.scan_width", "must be positive"));
        }
        if scan_width >= channels {
            return Err(Error::invalid(
                "network.scan_width",
                format!("must be smaller than the channel count {channels}"),
            ));
        }
        if !channels.is_multiple_of(scan_width) {
            return Err(Error::invalid(
                "network.scan_width",
                format!("{scan_width} does not divide the channel count {channels}"),
            ));
        }
        if users == 0 {
            return Err(Error::invalid("network.users", "at least one user is required"));
        }
        Ok(Self {
            channels,
            scan_width,
            users,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn scan_width(&self) -> usize {
        self.scan_width
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Number of slots a sweep needs to cover every channel once.
    pub fn period(&self) -> usize {
        self.channels / self.scan_width
    }

    /// Same band, different number of users.
    pub fn with_users(&self, users: usize) -> Result<Self> {
        Self::new(self.channels, self.scan_width, users)
    }

    /// Probability that a freshly hopped, active user lands on a scanned channel.
    pub fn scan_fraction(&self) -> f64 {
        self.scan_width as f64 / self.channels as f64
    }
}

impl fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} m={} n={}",
            self.channels, self.scan_width, self.users
        )
    }
}

/// Per-slot payoffs and the discount factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    /// Reward for a successful slot (R).
    pub reward: f64,
    /// Cost paid whenever the user hops (C).
    pub hop_cost: f64,
    /// Loss of a jammed slot (L).
    pub jam_loss: f64,
    pub gamma: f64,
}

impl RewardParams {
    pub fn new(reward: f64, hop_cost: f64, jam_loss: f64, gamma: f64) -> Result<Self> {
        let params = Self {
            reward,
            hop_cost,
            jam_loss,
            gamma,
        };
        params.validate()?;
        if gamma == 0.0 {
            return Err(Error::invalid("rewards.gamma", "must lie in (0, 1)"));
        }
        Ok(params)
    }

    /// Checks everything except the lower end of gamma; solvers accept
    /// gamma = 0 so that myopic models can be checked by hand.
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("rewards.reward", self.reward),
            ("rewards.hop_cost", self.hop_cost),
            ("rewards.jam_loss", self.jam_loss),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {value}")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(
                "rewards.gamma",
                format!("must lie in (0, 1), got {}", self.gamma),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            reward: self.reward * factor,
            hop_cost: self.hop_cost * factor,
            jam_loss: self.jam_loss * factor,
            gamma: self.gamma,
        }
    }

    /// Largest per-slot reward magnitude, max(R, L + C).
    pub fn max_abs_reward(&self) -> f64 {
        self.reward.max(self.jam_loss + self.hop_cost)
    }

    /// Shortest horizon whose discounted tail, gamma^H max|U| / (1 - gamma),
    /// stays below `bound`.
    pub fn min_horizon(&self, bound: f64) -> usize {
        let scale = self.max_abs_reward() / (1.0 - self.gamma);
        if self.gamma == 0.0 || scale < bound {
            return 1;
        }
        ((bound / scale).ln() / self.gamma.ln()).floor() as usize + 1
    }
}
