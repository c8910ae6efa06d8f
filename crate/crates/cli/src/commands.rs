//! The `solve`, `simulate`, `arms-race` and `bounds` subcommands.

use std::io::Write;

use anyhow::Result;
use hopgame::analysis::{kstar_bounds, theta_bounds};
use hopgame::arms_race::{
    arms_race, best_threshold_by_simulation, fixed_point, inactive_g, ArmsRaceOptions, FixedPointOptions,
    SearchOptions, ROUND_LOG_HEADER,
};
use hopgame::mdp::{edsr, greedy_policy, policy_evaluation, Action, MdpModel, StayingPolicy, TransitionKernel, ValueIteration};
use hopgame::netsim::{run_episodes, write_trace, CollisionProtocol, Scenario, World};
use hopgame::{Error, JammerStrategy};

use crate::config::{ConfigError, Experiment, PolicyChoice};
use crate::table::{cell, num, CsvDoc};

fn fixed_point_options(exp: &Experiment) -> FixedPointOptions {
    let mut fp = FixedPointOptions::new(&exp.rewards);
    fp.theta_halfwidth = exp.theta_halfwidth;
    fp.warmup = exp.sim.warmup;
    fp.resolve.horizon = exp.sim.horizon;
    fp.resolve.warmup = exp.sim.warmup;
    fp
}

/// Theta used by `solve`, with a note on where it came from.
fn solve_theta(exp: &Experiment) -> Result<(f64, &'static str)> {
    if let Some(theta) = exp.theta {
        return Ok((theta, "config"));
    }
    if exp.network.users() == 1 {
        return Ok((0.0, "single user"));
    }
    match exp.policy {
        PolicyChoice::Fixed(p) => {
            let est = inactive_g(p, &exp.network, exp.jammer, exp.protocol, exp.theta_halfwidth, exp.sim.warmup, exp.seed)?;
            Ok((est.theta, "simulated g(K)"))
        }
        PolicyChoice::Optimize if exp.jammer == JammerStrategy::BasicSweep => {
            let fp = fixed_point(
                StayingPolicy::Threshold(0),
                &exp.network,
                &exp.rewards,
                exp.jammer,
                exp.protocol,
                &fixed_point_options(exp),
                exp.seed,
            )?;
            Ok((fp.theta, "fixed point"))
        }
        PolicyChoice::Optimize => Err(ConfigError::new(
            "theta",
            format!("must be given to optimize against {} with several users", exp.jammer),
        )
        .into()),
    }
}

/// Values and the optimal threshold at the configured (or estimated) theta.
pub fn solve(exp: &Experiment, tol: f64) -> Result<CsvDoc> {
    let (theta, source) = solve_theta(exp)?;
    let kernel = TransitionKernel::closed_form(&exp.network, exp.jammer, theta)?;
    let model = MdpModel::new(kernel, exp.rewards)?;
    let (table, policy) = match ValueIteration::new(tol).solve(&model) {
        Ok(table) => {
            let best = greedy_policy(&table)?;
            let policy = match exp.policy {
                PolicyChoice::Fixed(p) => p,
                PolicyChoice::Optimize => best,
            };
            (table, policy)
        }
        Err(Error::MissingRow { state, .. }) => match exp.policy {
            PolicyChoice::Fixed(p) => (policy_evaluation(&model, &p)?, p),
            PolicyChoice::Optimize => {
                return Err(ConfigError::new(
                    "jammer",
                    format!(
                        "{} has no closed-form kernel at streak {state}; fix `policy` to evaluate it or use `simulate`",
                        exp.jammer
                    ),
                )
                .into())
            }
        },
        Err(e) => return Err(e.into()),
    };
    let value = edsr(&model, &policy)?;

    let mut doc = CsvDoc::new("solve", exp.seed, &exp.echo, &["state", "V", "Q_stay", "Q_hop", "action"]);
    doc.note("theta", num(theta));
    doc.note("theta_source", source);
    doc.note("K", policy);
    doc.note("edsr", num(value));
    doc.note("sweeps", table.sweeps());
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for state in table.space().states() {
        doc.push(vec![
            cell(state),
            opt(table.value(state)),
            opt(table.q(state, Action::Stay)),
            opt(table.q(state, Action::Hop)),
            cell(policy.action(state)),
        ]);
    }
    Ok(doc)
}

/// Threshold used by `simulate` when the policy is not fixed.
fn chosen_policy(exp: &Experiment) -> Result<(StayingPolicy, &'static str)> {
    match exp.policy {
        PolicyChoice::Fixed(p) => Ok((p, "config")),
        PolicyChoice::Optimize if exp.jammer == JammerStrategy::BasicSweep => {
            let fp = fixed_point(
                StayingPolicy::Threshold(0),
                &exp.network,
                &exp.rewards,
                exp.jammer,
                exp.protocol,
                &fixed_point_options(exp),
                exp.seed,
            )?;
            Ok((fp.policy, "fixed point"))
        }
        PolicyChoice::Optimize => {
            let opts = SearchOptions {
                sim: exp.sim,
                max_rounds: 4,
            };
            let search = best_threshold_by_simulation(&exp.network, &exp.rewards, exp.jammer, exp.protocol, &opts, exp.seed)?;
            Ok((search.policy, "simulated search"))
        }
    }
}

pub struct Simulation {
    pub doc: CsvDoc,
    pub scenario: Scenario,
}

/// Monte-Carlo EDSR, theta estimate and visit counts.
pub fn simulate(exp: &Experiment) -> Result<Simulation> {
    let (policy, source) = chosen_policy(exp)?;
    let mut scenario = Scenario::new(exp.network, exp.jammer, exp.protocol, policy);
    scenario.detection_error_prob = exp.detection_error_prob;
    let m = run_episodes(&scenario, &exp.rewards, &exp.sim, exp.seed)?;

    let mut doc = CsvDoc::new("simulate", exp.seed, &exp.echo, &["metric", "value"]);
    doc.note("K_source", source);
    let mut put = |k: &str, v: String| doc.push(vec![k.to_string(), v]);
    put("K", cell(policy));
    put("episodes", cell(exp.sim.episodes));
    put("horizon", cell(exp.sim.horizon));
    put("warmup", cell(exp.sim.warmup));
    put("edsr", num(m.edsr_estimate));
    put("edsr_stderr", num(m.edsr_stderr));
    put("theta_hat", num(m.theta_hat));
    put("theta_lo", num(m.theta_ci.0));
    put("theta_hi", num(m.theta_ci.1));
    put("hop_events", cell(m.hop_events));
    put("inactive_events", cell(m.inactive_events));
    put("slots", cell(m.slots));
    for (state, action, n) in &m.visits {
        put(&format!("visits.{state}.{action}"), cell(n));
    }
    Ok(Simulation { doc, scenario })
}

/// Writes the first `slots` slots of the world seeded like episode 0.
pub fn trace<W: Write>(scenario: &Scenario, seed: u64, slots: usize, out: &mut W) -> Result<()> {
    let mut world = World::new(*scenario, seed)?;
    write_trace(&mut world, slots, out)?;
    Ok(())
}

/// The four arms-race rounds and the fixed point behind them.
pub fn arms_race_cmd(exp: &Experiment) -> Result<CsvDoc> {
    let mut opts = ArmsRaceOptions::new(&exp.rewards);
    opts.fixed_point = fixed_point_options(exp);
    opts.sim = exp.sim;
    let (rounds, fp) = arms_race(&exp.network, &exp.rewards, exp.protocol, &opts, exp.seed)?;
    let columns: Vec<&str> = ROUND_LOG_HEADER.split(',').collect();
    let mut doc = CsvDoc::new("arms-race", exp.seed, &exp.echo, &columns);
    doc.note("K_star", fp.policy);
    doc.note("theta_star", num(fp.theta));
    doc.note("iterations", fp.iterations);
    doc.note("converged", fp.converged);
    doc.note("cycle_resolved", fp.cycle_resolved);
    let path: Vec<String> = fp.trajectory.iter().map(|(k, t)| format!("{k}@{}", num(*t))).collect();
    doc.note("trajectory", path.join(" "));
    for r in &rounds {
        doc.push(vec![
            cell(r.round),
            cell(r.jammer),
            cell(r.policy),
            num(r.theta),
            num(r.edsr),
            num(r.stderr),
            cell(r.source),
        ]);
    }
    Ok(doc)
}

/// Theta bounds and the thresholds they imply, for both protocols.
pub fn bounds(exp: &Experiment) -> Result<CsvDoc> {
    let mut doc = CsvDoc::new("bounds", exp.seed, &exp.echo, &["protocol", "theta_lo", "theta_hi", "K_lo", "K_hi"]);
    for protocol in CollisionProtocol::ALL {
        let b = theta_bounds(protocol, exp.network.users(), exp.network.channels())?;
        let (lo, hi) = kstar_bounds(&exp.network, &exp.rewards, &b)?;
        doc.push(vec![cell(protocol), num(b.lower), num(b.upper), cell(lo), cell(hi)]);
    }
    Ok(doc)
}

/// One line per protocol with six decimals.
pub fn bounds_summary(doc: &CsvDoc) -> String {
    doc.rows
        .iter()
        .map(|r| {
            let p = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
            format!("{}: theta in [{:.6}, {:.6}], K in [{}, {}]\n", r[0], p(&r[1]), p(&r[2]), r[3], r[4])
        })
        .collect()
}
