//! Closed-form bounds on the inactive probability and on the optimal
//! staying threshold.

use crate::arms_race::best_response_f;
use crate::error::{Error, Result};
use crate::mdp::StayingPolicy;
use crate::netsim::CollisionProtocol;
use crate::params::{NetworkConfig, RewardParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBounds {
    pub lower: f64,
    pub upper: f64,
    pub protocol: CollisionProtocol,
}

impl ThetaBounds {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

/// ln C(n, k) for every k in 0..=n.
fn ln_binomials(n: usize) -> Vec<f64> {
    let mut ln_fact = vec![0.0; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    (0..=n).map(|k| ln_fact[n] - ln_fact[k] - ln_fact[n - k]).collect()
}

/// Bounds on the inactive probability of `users` users over `channels`
/// channels.
///
/// Both protocols share the upper bound `(n - 1)/M`, clamped to 1. The
/// all-hopping lower bound is `1 - (1 - 1/M)^(n-1)`; under the random
/// protocol the lower bound keeps a `1/(i + 1)` chance of winning against
/// `i` other arrivals. The binomial sum is evaluated in log space.
pub fn theta_bounds(protocol: CollisionProtocol, users: usize, channels: usize) -> Result<ThetaBounds> {
    if users == 0 {
        return Err(Error::invalid("network.users", "must be at least 1"));
    }
    if channels < 2 {
        return Err(Error::invalid("network.channels", "must be at least 2"));
    }
    let others = users - 1;
    let q = 1.0 / channels as f64;
    let upper = (others as f64 * q).min(1.0);
    let lower = match protocol {
        CollisionProtocol::AllHopping => -((others as f64) * (-q).ln_1p()).exp_m1(),
        CollisionProtocol::Random => {
            let ln_c = ln_binomials(others);
            let (ln_q, ln_p) = (q.ln(), (-q).ln_1p());
            (1..=others)
                .map(|i| {
                    let ln_term = ln_c[i] + i as f64 * ln_q + (others - i) as f64 * ln_p;
                    i as f64 / (i + 1) as f64 * ln_term.exp()
                })
                .sum()
        }
    };
    Ok(ThetaBounds {
        lower: lower.min(upper),
        upper,
        protocol,
    })
}

/// Thresholds of the best responses to the two ends of `bounds`; the
/// optimal threshold lies between them because K(theta) is monotone.
pub fn kstar_bounds(
    config: &NetworkConfig,
    rewards: &RewardParams,
    bounds: &ThetaBounds,
) -> Result<(StayingPolicy, StayingPolicy)> {
    if !(0.0 <= bounds.lower && bounds.lower <= bounds.upper && bounds.upper <= 1.0) {
        return Err(Error::invalid(
            "bounds",
            format!("[{}, {}] is not a sub-interval of [0, 1]", bounds.lower, bounds.upper),
        ));
    }
    Ok((
        best_response_f(bounds.lower, config, rewards)?,
        best_response_f(bounds.upper, config, rewards)?,
    ))
}
