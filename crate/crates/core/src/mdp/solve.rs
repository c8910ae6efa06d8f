use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::RewardParams;

use super::kernel::TransitionKernel;
use super::policy::StayingPolicy;
use super::state::{reward, Action, StateSpace, StreakTail, UserState};

/// Default sup-norm residual for value iteration.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on Bellman sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

/// A kernel together with the rewards it is solved under.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    pub kernel: TransitionKernel,
    pub rewards: RewardParams,
}

impl MdpModel {
    pub fn new(kernel: TransitionKernel, rewards: RewardParams) -> Result<Self> {
        rewards.validate()?;
        Ok(Self { kernel, rewards })
    }

    pub fn space(&self) -> &StateSpace {
        self.kernel.space()
    }

    fn reward(&self, state: UserState, action: Action) -> f64 {
        reward(state, action, &self.rewards).expect("action checked by caller")
    }
}

/// State and action values. Entries are `None` where a solver had nothing
/// to say (unvisitable states, unknown rows).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    space: StateSpace,
    values: Vec<Option<f64>>,
    q_hop: Vec<Option<f64>>,
    q_stay: Vec<Option<f64>>,
    /// Sup-norm change of V after each value-iteration sweep.
    pub residuals: Vec<f64>,
}

impl ValueTable {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn value(&self, state: UserState) -> Option<f64> {
        self.values[self.space.index(state)?]
    }

    pub fn q(&self, state: UserState, action: Action) -> Option<f64> {
        let i = self.space.index(state)?;
        match action {
            Action::Hop => self.q_hop[i],
            Action::Stay => self.q_stay[i],
        }
    }

    /// Number of Bellman sweeps performed (0 for policy evaluation).
    pub fn sweeps(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// Value iteration on the Bellman optimality operator.
///
/// Sweeps stop once the change `d` between sweeps satisfies
/// `d max(1, gamma/(1 - gamma)) < tol`, which bounds both the Bellman
/// residual and the distance to the optimal values by `tol`.
#[derive(Debug, Clone, Copy)]
pub struct ValueIteration {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ValueIteration {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl ValueIteration {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn solve(&self, model: &MdpModel) -> Result<ValueTable> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        let space = *model.space();
        let kernel = &model.kernel;
        let gamma = model.rewards.gamma;
        let n = space.len();

        let hop: Vec<(usize, f64)> = kernel
            .hop_row()
            .entries()
            .into_iter()
            .filter_map(|(s, p)| space.index(s).map(|i| (i, p)))
            .collect();
        // (state index, p_jam, successor index) for each streak state
        let mut stay = Vec::with_capacity(space.max_streak());
        for k in 1..=space.max_streak() {
            let state = UserState::Streak(k);
            let jam = kernel.stay_jam(k).ok_or(Error::MissingRow {
                state,
                action: Action::Stay,
            })?;
            let next = space.index(UserState::Streak(kernel.stay_successor(k))).unwrap();
            stay.push((space.index(state).unwrap(), jam, next));
        }
        let hop_reward: Vec<f64> = space.states().map(|s| model.reward(s, Action::Hop)).collect();
        let stay_reward = model.rewards.reward;
        let jammed = space.index(UserState::Jammed).unwrap();

        let mut v = vec![0.0; n];
        let mut q_hop = vec![0.0; n];
        let mut q_stay = vec![f64::NEG_INFINITY; n];
        let mut residuals = Vec::new();
        let stop = self.tol * (1.0f64).min((1.0 - gamma) / gamma);
        loop {
            let cont: f64 = hop.iter().map(|&(i, p)| p * v[i]).sum();
            for (q, r) in q_hop.iter_mut().zip(&hop_reward) {
                *q = r + gamma * cont;
            }
            for &(i, jam, next) in &stay {
                q_stay[i] = stay_reward + gamma * (jam * v[jammed] + (1.0 - jam) * v[next]);
            }
            let mut residual: f64 = 0.0;
            for i in 0..n {
                let best = q_hop[i].max(q_stay[i]);
                residual = residual.max((best - v[i]).abs());
                v[i] = best;
            }
            residuals.push(residual);
            if residual < stop {
                break;
            }
            if residuals.len() >= self.max_sweeps {
                return Err(Error::NoConvergence {
                    sweeps: residuals.len(),
                    residual,
                });
            }
        }

        Ok(ValueTable {
            space,
            values: v.into_iter().map(Some).collect(),
            q_hop: q_hop.into_iter().map(Some).collect(),
            q_stay: q_stay
                .into_iter()
                .map(|q| (q > f64::NEG_INFINITY).then_some(q))
                .collect(),
            residuals,
        })
    }
}

/// Optimal values with residual below `tol`.
pub fn value_iteration(model: &MdpModel, tol: f64) -> Result<ValueTable> {
    ValueIteration::new(tol).solve(model)
}

/// Greedy policy of a solved table, checked to have threshold shape.
///
/// Ties between staying and hopping go to staying. When staying is
/// preferred at every streak of a looped tail the result is the minimal
/// policy.
pub fn greedy_policy(table: &ValueTable) -> Result<StayingPolicy> {
    let space = table.space();
    let mut stay_at = Vec::new();
    let mut hop_at = Vec::new();
    for k in 1..=space.max_streak() {
        let s = UserState::Streak(k);
        let q_hop = table.q(s, Action::Hop).ok_or(Error::MissingRow {
            state: s,
            action: Action::Hop,
        })?;
        match table.q(s, Action::Stay) {
            Some(q_stay) if q_stay >= q_hop => stay_at.push(k),
            _ => hop_at.push(k),
        }
    }
    let threshold = stay_at.len();
    if let (Some(&last_stay), Some(&first_hop)) = (stay_at.last(), hop_at.first()) {
        if last_stay > first_hop {
            let hop_at = hop_at.into_iter().filter(|&k| k < last_stay).collect();
            let stay_at = stay_at.into_iter().filter(|&k| k > first_hop).collect();
            return Err(Error::NotThreshold { hop_at, stay_at });
        }
    }
    if threshold == space.max_streak() && space.tail() == StreakTail::Looped {
        Ok(StayingPolicy::Minimal)
    } else {
        Ok(StayingPolicy::Threshold(threshold))
    }
}

/// States reachable from the post-hop distribution when following `policy`.
fn visitable(model: &MdpModel, policy: &StayingPolicy) -> Result<Vec<UserState>> {
    let space = model.space();
    let mut seen = vec![false; space.len()];
    let mut stack: Vec<UserState> = Vec::new();
    let mut push = |s: UserState, stack: &mut Vec<UserState>| {
        if let Some(i) = space.index(s) {
            if !seen[i] {
                seen[i] = true;
                stack.push(s);
            }
        }
    };
    for (s, p) in model.kernel.hop_row().entries() {
        if p > 0.0 {
            push(s, &mut stack);
        }
    }
    let mut order = Vec::new();
    while let Some(s) = stack.pop() {
        order.push(s);
        let action = policy.action(s);
        for (next, p) in model.kernel.row(s, action)? {
            if p > 0.0 {
                push(next, &mut stack);
            }
        }
    }
    order.sort();
    Ok(order)
}

/// Exact V of `policy` over its visitable states, by a direct linear solve
/// of the Bellman expectation system. Only the rows of visited
/// (state, action) pairs are needed.
pub fn policy_evaluation(model: &MdpModel, policy: &StayingPolicy) -> Result<ValueTable> {
    let space = *model.space();
    let gamma = model.rewards.gamma;
    let states = visitable(model, policy)?;
    let local: Vec<Option<usize>> = {
        let mut local = vec![None; space.len()];
        for (j, s) in states.iter().enumerate() {
            local[space.index(*s).unwrap()] = Some(j);
        }
        local
    };
    let d = states.len();
    let mut a = DMatrix::<f64>::identity(d, d);
    let mut b = DVector::<f64>::zeros(d);
    let mut rows = Vec::with_capacity(d);
    for (j, &s) in states.iter().enumerate() {
        let action = policy.action(s);
        b[j] = model.reward(s, action);
        let row = model.kernel.row(s, action)?;
        for &(next, p) in &row {
            if p > 0.0 {
                let col = local[space.index(next).unwrap()].unwrap();
                a[(j, col)] -= gamma * p;
            }
        }
        rows.push(row);
    }
    let x = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or(Error::Singular { residual: f64::INFINITY })?;
    let residual = (&a * &x - &b).amax();
    if residual.is_nan() || residual >= 1e-10 {
        return Err(Error::Singular { residual });
    }

    let mut values = vec![None; space.len()];
    for (j, s) in states.iter().enumerate() {
        values[space.index(*s).unwrap()] = Some(x[j]);
    }
    let value_of = |s: UserState| space.index(s).and_then(|i| values[i]);
    let mut q_hop = vec![None; space.len()];
    let mut q_stay = vec![None; space.len()];
    for s in space.states() {
        let i = space.index(s).unwrap();
        for action in [Action::Hop, Action::Stay] {
            if !action.allowed_in(s) {
                continue;
            }
            let Ok(row) = model.kernel.row(s, action) else { continue };
            let future: Option<f64> = row
                .iter()
                .map(|&(next, p)| if p > 0.0 { value_of(next).map(|v| p * v) } else { Some(0.0) })
                .sum();
            if let Some(future) = future {
                let q = model.reward(s, action) + gamma * future;
                match action {
                    Action::Hop => q_hop[i] = Some(q),
                    Action::Stay => q_stay[i] = Some(q),
                }
            }
        }
    }
    Ok(ValueTable {
        space,
        values,
        q_hop,
        q_stay,
        residuals: Vec::new(),
    })
}

/// Expected discounted sum of rewards of `policy`, starting from the
/// post-hop distribution over {J, I, 1}.
pub fn edsr(model: &MdpModel, policy: &StayingPolicy) -> Result<f64> {
    let table = policy_evaluation(model, policy)?;
    Ok(expected_start_value(model, &table))
}

pub(crate) fn expected_start_value(model: &MdpModel, table: &ValueTable) -> f64 {
    model
        .kernel
        .hop_row()
        .entries()
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(s, p)| p * table.value(s).expect("start states are visitable"))
        .sum()
}
