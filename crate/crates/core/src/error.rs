use thiserror::Error;

use crate::mdp::{Action, UserState};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("action {action} is not allowed in state {state}")]
    ForbiddenAction { state: UserState, action: Action },

    #[error("the kernel has no transition row for ({state}, {action})")]
    MissingRow { state: UserState, action: Action },

    #[error("({state}, {action}) was visited {visits} times, at least {required} are needed")]
    StarvedRow {
        state: UserState,
        action: Action,
        visits: u64,
        required: u64,
    },

    #[error("no closed-form kernel for {jammer} with {users} users")]
    NoClosedForm { jammer: String, users: usize },

    #[error("value iteration stopped after {sweeps} sweeps with residual {residual:e}")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("Q-values are not threshold shaped: hop preferred at streaks {hop_at:?} below stay-preferred streaks {stay_at:?}")]
    NotThreshold { hop_at: Vec<usize>, stay_at: Vec<usize> },

    #[error("Bellman expectation system is singular (residual {residual:e})")]
    Singular { residual: f64 },

    #[error("inactive-probability estimate hit the cap of {cap} hop events")]
    SampleCap { cap: u64 },
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::ForbiddenAction { .. } | Error::NoClosedForm { .. }
        )
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
