//! Datasets behind the figures, one CSV per figure id.
//!
//! Every figure fixes its own parameters; only the seed and the episode
//! count come from the command line. Points run in parallel, each on
//! `split_seed(seed, index)`, and rows are written in grid order.

use std::collections::HashMap;

use anyhow::Result;
use hopgame::analysis::{kstar_bounds, theta_bounds};
use hopgame::arms_race::{
    arms_race, best_response_f, best_threshold_by_simulation, fixed_point, inactive_g, ArmsRaceOptions,
    ArmsRaceRound, FixedPointOptions, SearchOptions,
};
use hopgame::mdp::StayingPolicy;
use hopgame::netsim::{run_episodes, CollisionProtocol, Scenario, SimOptions, DEFAULT_THETA_HALFWIDTH, DEFAULT_WARMUP};
use hopgame::rng::split_seed;
use hopgame::{JammerStrategy, NetworkConfig, RewardParams};
use rayon::prelude::*;

use crate::config::ConfigError;
use crate::table::{cell, num, CsvDoc};

pub const FIGURE_IDS: [u32; 8] = [6, 7, 8, 9, 10, 11, 12, 13];

/// Episodes per simulated point unless overridden.
pub fn default_episodes(id: u32) -> usize {
    match id {
        13 => 2_000,
        _ => 10_000,
    }
}

fn rewards(jam_loss: f64) -> RewardParams {
    RewardParams::new(5.0, 5.0, jam_loss, 0.9).expect("figure rewards are valid")
}

fn network(scan_width: usize, users: usize) -> NetworkConfig {
    NetworkConfig::new(60, scan_width, users).expect("figure networks are valid")
}

fn echo(params: &[(&str, String)]) -> Vec<String> {
    params.iter().map(|(k, v)| format!("{k} = {v}")).collect()
}

fn grid(lo: f64, step: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9).collect()
}

fn par_points<T: Sync, R: Send>(points: &[T], f: impl Fn(usize, &T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    points.par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
}

fn round_cells(r: &ArmsRaceRound) -> [String; 7] {
    [
        cell(r.round),
        cell(r.jammer),
        cell(r.policy),
        num(r.theta),
        num(r.edsr),
        num(r.stderr),
        cell(r.source),
    ]
}

fn fig6(seed: u64, episodes: usize) -> Result<CsvDoc> {
    let ls: Vec<f64> = grid(5.0, 5.0, 10);
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "5..50 step 5".into()),
        ("n", "1".into()),
        ("M", "60".into()),
        ("m", "5".into()),
        ("gamma", "0.9".into()),
        ("episodes", episodes.to_string()),
    ];
    let mut doc = CsvDoc::new("fig6", seed, &echo(&params), &["L", "round", "jammer", "K", "edsr"]);
    let results = par_points(&ls, |i, &l| {
        let r = rewards(l);
        let mut opts = ArmsRaceOptions::new(&r);
        opts.sim = SimOptions::new(episodes, &r);
        Ok(arms_race(&network(5, 1), &r, CollisionProtocol::AllHopping, &opts, split_seed(seed, i as u64))?.0)
    })?;
    for (l, rounds) in ls.iter().zip(results) {
        for r in rounds {
            let c = round_cells(&r);
            doc.push(vec![num(*l), c[0].clone(), c[1].clone(), c[2].clone(), c[4].clone()]);
        }
    }
    Ok(doc)
}

fn fig7(seed: u64) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "1..50 step 1".into()),
        ("n", "1".into()),
        ("M", "60".into()),
        ("m", "2,4,6".into()),
        ("gamma", "0.9".into()),
    ];
    let mut doc = CsvDoc::new("fig7", seed, &echo(&params), &["m", "L", "K_star"]);
    let points: Vec<(usize, f64)> = [2, 4, 6].iter().flat_map(|&m| grid(1.0, 1.0, 50).into_iter().map(move |l| (m, l))).collect();
    let ks = par_points(&points, |_, &(m, l)| Ok(best_response_f(0.0, &network(m, 1), &rewards(l))?))?;
    for ((m, l), k) in points.iter().zip(ks) {
        doc.push(vec![cell(m), num(*l), cell(k)]);
    }
    Ok(doc)
}

fn fig8(seed: u64) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("M", "60".into()),
        ("m", "2,4,6".into()),
        ("gamma", "0.9".into()),
        ("theta", "0..1 step 0.01".into()),
        ("n", "2 (any n >= 2 gives the same kernel for a given theta)".into()),
    ];
    let mut doc = CsvDoc::new("fig8", seed, &echo(&params), &["m", "theta", "K_theta"]);
    let points: Vec<(usize, f64)> = [2, 4, 6].iter().flat_map(|&m| grid(0.0, 0.01, 101).into_iter().map(move |t| (m, t))).collect();
    let ks = par_points(&points, |_, &(m, t)| Ok(best_response_f(t, &network(m, 2), &rewards(20.0))?))?;
    for ((m, t), k) in points.iter().zip(ks) {
        doc.push(vec![cell(m), num(*t), cell(k)]);
    }
    Ok(doc)
}

fn fig9(seed: u64) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("n", "1..10".into()),
        ("M", "60".into()),
        ("m", "3".into()),
        ("gamma", "0.9".into()),
    ];
    let columns = ["n", "protocol", "theta_lo", "theta_hi", "K_lo", "K_hi", "K_star", "theta_star"];
    let mut doc = CsvDoc::new("fig9", seed, &echo(&params), &columns);
    let points: Vec<(usize, CollisionProtocol)> =
        (1..=10).flat_map(|n| CollisionProtocol::ALL.into_iter().map(move |p| (n, p))).collect();
    let r = rewards(20.0);
    let rows = par_points(&points, |i, &(n, protocol)| {
        let config = network(3, n);
        let b = theta_bounds(protocol, n, 60)?;
        let (lo, hi) = kstar_bounds(&config, &r, &b)?;
        let fp = fixed_point(
            StayingPolicy::Threshold(0),
            &config,
            &r,
            JammerStrategy::BasicSweep,
            protocol,
            &FixedPointOptions::new(&r),
            split_seed(seed, i as u64),
        )?;
        Ok(vec![cell(n), cell(protocol), num(b.lower), num(b.upper), cell(lo), cell(hi), cell(fp.policy), num(fp.theta)])
    })?;
    for row in rows {
        doc.push(row);
    }
    Ok(doc)
}

fn fig10(seed: u64) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("n", "10".into()),
        ("M", "60".into()),
        ("m", "3".into()),
        ("gamma", "0.9".into()),
        ("protocol", "random".into()),
        ("theta", "0..1 step 0.1".into()),
        ("theta_halfwidth", DEFAULT_THETA_HALFWIDTH.to_string()),
    ];
    let mut doc = CsvDoc::new("fig10", seed, &echo(&params), &["theta", "K_theta", "g_f_theta", "ci_lo", "ci_hi"]);
    let config = network(3, 10);
    let r = rewards(20.0);
    let thetas = grid(0.0, 0.1, 11);
    let ks = thetas.iter().map(|&t| best_response_f(t, &config, &r)).collect::<Result<Vec<_>, _>>()?;
    // g depends only on K, so each distinct threshold is simulated once.
    let mut distinct = ks.clone();
    distinct.sort_by_key(StayingPolicy::order_key);
    distinct.dedup();
    let estimates = par_points(&distinct, |_, &k| {
        let s = split_seed(seed, k.order_key() as u64);
        Ok((k, inactive_g(k, &config, JammerStrategy::BasicSweep, CollisionProtocol::Random, DEFAULT_THETA_HALFWIDTH, DEFAULT_WARMUP, s)?))
    })?;
    let g: HashMap<_, _> = estimates.into_iter().collect();
    for (t, k) in thetas.iter().zip(&ks) {
        let e = &g[k];
        doc.push(vec![num(*t), cell(k), num(e.theta), num(e.ci.0), num(e.ci.1)]);
    }
    Ok(doc)
}

fn fig11(seed: u64, episodes: usize) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("n", "1..10".into()),
        ("M", "60".into()),
        ("m", "5".into()),
        ("gamma", "0.9".into()),
        ("protocol", "all-hopping".into()),
        ("episodes", episodes.to_string()),
    ];
    let columns = ["n", "round", "jammer", "K", "theta", "edsr", "stderr", "source"];
    let mut doc = CsvDoc::new("fig11", seed, &echo(&params), &columns);
    let ns: Vec<usize> = (1..=10).collect();
    let r = rewards(20.0);
    let results = par_points(&ns, |i, &n| {
        let mut opts = ArmsRaceOptions::new(&r);
        opts.sim = SimOptions::new(episodes, &r);
        Ok(arms_race(&network(5, n), &r, CollisionProtocol::AllHopping, &opts, split_seed(seed, i as u64))?.0)
    })?;
    for (n, rounds) in ns.iter().zip(results) {
        for round in rounds {
            let mut row = vec![cell(n)];
            row.extend(round_cells(&round));
            doc.push(row);
        }
    }
    Ok(doc)
}

fn fig12(seed: u64, episodes: usize) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("n", "1..10".into()),
        ("M", "60".into()),
        ("m", "5".into()),
        ("gamma", "0.9".into()),
        ("episodes", episodes.to_string()),
    ];
    let columns = ["n", "protocol", "K_star", "theta", "edsr_model", "edsr_sim", "stderr_sim"];
    let mut doc = CsvDoc::new("fig12", seed, &echo(&params), &columns);
    let points: Vec<(usize, CollisionProtocol)> =
        (1..=10).flat_map(|n| CollisionProtocol::ALL.into_iter().map(move |p| (n, p))).collect();
    let r = rewards(20.0);
    let rows = par_points(&points, |i, &(n, protocol)| {
        let config = network(5, n);
        let s = split_seed(seed, i as u64);
        let fp = fixed_point(
            StayingPolicy::Threshold(0),
            &config,
            &r,
            JammerStrategy::BasicSweep,
            protocol,
            &FixedPointOptions::new(&r),
            s,
        )?;
        let kernel = hopgame::mdp::TransitionKernel::sweep(&config, fp.theta)?;
        let model = hopgame::mdp::edsr(&hopgame::MdpModel::new(kernel, r)?, &fp.policy)?;
        let scenario = Scenario::new(config, JammerStrategy::BasicSweep, protocol, fp.policy);
        let sim = run_episodes(&scenario, &r, &SimOptions::new(episodes, &r), s)?;
        Ok(vec![
            cell(n),
            cell(protocol),
            cell(fp.policy),
            num(fp.theta),
            num(model),
            num(sim.edsr_estimate),
            num(sim.edsr_stderr),
        ])
    })?;
    for row in rows {
        doc.push(row);
    }
    Ok(doc)
}

/// Jammers compared in the unpredictable-jamming figure.
pub fn fig13_strategies() -> Vec<JammerStrategy> {
    let mut s = vec![JammerStrategy::ReactiveSweep];
    s.extend([0, 3, 6, 7, 11].map(JammerStrategy::Memory));
    s.push(JammerStrategy::BasicSweep);
    s
}

fn fig13(seed: u64, episodes: usize) -> Result<CsvDoc> {
    let params = [
        ("R", "5".into()),
        ("C", "5".into()),
        ("L", "20".into()),
        ("n", "1..10".into()),
        ("M", "60".into()),
        ("m", "5".into()),
        ("gamma", "0.9".into()),
        ("protocol", "all-hopping".into()),
        ("episodes", episodes.to_string()),
    ];
    let mut doc = CsvDoc::new("fig13", seed, &echo(&params), &["n", "strategy", "K", "edsr", "stderr"]);
    let points: Vec<(usize, JammerStrategy)> =
        (1..=10).flat_map(|n| fig13_strategies().into_iter().map(move |j| (n, j))).collect();
    let r = rewards(20.0);
    let opts = SearchOptions::new(episodes, &r);
    let rows = par_points(&points, |_, &(n, jammer)| {
        // one seed per n, so strategies share random numbers
        let s = split_seed(seed, n as u64);
        let found = best_threshold_by_simulation(&network(5, n), &r, jammer, CollisionProtocol::AllHopping, &opts, s)?;
        Ok(vec![cell(n), cell(jammer), cell(found.policy), num(found.edsr), num(found.stderr)])
    })?;
    for row in rows {
        doc.push(row);
    }
    Ok(doc)
}

/// Builds the dataset for figure `id`.
pub fn figure(id: u32, seed: u64, episodes: Option<usize>) -> Result<CsvDoc> {
    let episodes = episodes.unwrap_or_else(|| default_episodes(id));
    if episodes < 2 {
        return Err(ConfigError::new("sim.episodes", "at least 2 episodes are required").into());
    }
    match id {
        6 => fig6(seed, episodes),
        7 => fig7(seed),
        8 => fig8(seed),
        9 => fig9(seed),
        10 => fig10(seed),
        11 => fig11(seed, episodes),
        12 => fig12(seed, episodes),
        13 => fig13(seed, episodes),
        other => Err(ConfigError::new("figure", format!("no dataset for figure {other} (expected 6..13)")).into()),
    }
}
