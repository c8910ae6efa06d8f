//! Per-user Markov decision process: states, rewards, kernels and solvers.

mod kernel;
mod policy;
mod solve;
mod state;

pub use kernel::{
    streak_layout, sweep_kernel, HopRow, TransitionKernel, ROW_SUM_TOL, TRUNCATION_PERIODS,
};
pub use policy::StayingPolicy;
pub use solve::{
    edsr, greedy_policy, policy_evaluation, value_iteration, MdpModel, ValueIteration, ValueTable,
    DEFAULT_MAX_SWEEPS, DEFAULT_TOL,
};
pub use state::{reward, Action, StateSpace, StreakTail, UserState};
