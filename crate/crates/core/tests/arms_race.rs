use hopgame::arms_race::*;
use hopgame::mdp::StayingPolicy;
use hopgame::netsim::CollisionProtocol;
use hopgame::{JammerStrategy, NetworkConfig, RewardParams};

fn rewards() -> RewardParams {
    RewardParams::new(5.0, 5.0, 20.0, 0.9).unwrap()
}

fn net(users: usize) -> NetworkConfig {
    NetworkConfig::new(60, 5, users).unwrap()
}

#[test]
fn best_response_examples() {
    assert_eq!(best_response_f(0.0, &net(1), &rewards()).unwrap(), StayingPolicy::Threshold(5));
    assert!(best_response_f(0.1, &net(1), &rewards()).is_err());
}

#[test]
fn g_examples() {
    let est = inactive_g(StayingPolicy::Threshold(3), &net(1), JammerStrategy::BasicSweep, CollisionProtocol::Random, 0.01, 50, 1).unwrap();
    assert_eq!(est.theta, 0.0);
    let est = inactive_g(StayingPolicy::Threshold(3), &net(2), JammerStrategy::BasicSweep, CollisionProtocol::AllHopping, 0.002, 200, 1).unwrap();
    let p = 1.0 / 60.0;
    let se = (p * (1.0 - p) / est.hops as f64).sqrt();
    assert!((est.theta - p).abs() <= 3.0 * se, "{est:?}");
    let levels: Vec<_> = [0, 3, 6]
        .iter()
        .map(|&k| inactive_g(StayingPolicy::Threshold(k), &net(6), JammerStrategy::BasicSweep, CollisionProtocol::Random, 0.002, 200, 2).unwrap())
        .collect();
    assert!(levels.windows(2).all(|w| w[1].ci.1 >= w[0].ci.0), "{levels:?}");
}

#[test]
fn single_user_fixed_point_takes_one_update() {
    let opts = FixedPointOptions::new(&rewards());
    for k in 0..12 {
        let fp = fixed_point(StayingPolicy::Threshold(k), &net(1), &rewards(), JammerStrategy::BasicSweep, CollisionProtocol::AllHopping, &opts, 1).unwrap();
        assert!(fp.converged);
        assert_eq!(fp.policy, StayingPolicy::Threshold(5));
        assert!(fp.iterations <= 1);
        let n = fp.trajectory.len();
        assert_eq!(fp.trajectory[n - 1].0, fp.trajectory[n - 2].0);
    }
}

#[test]
fn eight_users_settle_on_six() {
    let opts = FixedPointOptions::new(&rewards());
    let fp = fixed_point(StayingPolicy::Threshold(0), &net(8), &rewards(), JammerStrategy::BasicSweep, CollisionProtocol::AllHopping, &opts, 1).unwrap();
    assert!(fp.converged && !fp.cycle_resolved);
    assert_eq!(fp.policy, StayingPolicy::Threshold(6));
    let thetas: Vec<f64> = fp.trajectory.iter().map(|t| t.1).collect();
    let up = thetas.windows(2).all(|w| w[0] <= w[1]);
    let down = thetas.windows(2).all(|w| w[0] >= w[1]);
    assert!(up || down, "{thetas:?}");
}

#[test]
fn fixed_point_rejects_bad_inputs() {
    let opts = FixedPointOptions::new(&rewards());
    let run = |k, j| fixed_point(k, &net(2), &rewards(), j, CollisionProtocol::Random, &opts, 0);
    assert!(run(StayingPolicy::Threshold(12), JammerStrategy::BasicSweep).is_err());
    assert!(run(StayingPolicy::Minimal, JammerStrategy::BasicSweep).is_err());
    assert!(run(StayingPolicy::Threshold(0), JammerStrategy::RANDOM).is_err());
}

#[test]
fn quantization_grid() {
    assert_eq!(quantize(0.0169, 0.002), 0.016);
    assert_eq!(quantize(0.0171, 0.002), 0.018);
    assert_eq!(quantize(1.2, 0.002), 1.0);
}

#[test]
fn single_user_arms_race() {
    let (rounds, fp) = arms_race(&net(1), &rewards(), CollisionProtocol::AllHopping, &ArmsRaceOptions::new(&rewards()), 5).unwrap();
    assert_eq!(rounds.len(), 4);
    assert_eq!(fp.policy, StayingPolicy::Threshold(5));
    assert!(rounds.iter().all(|r| r.source == EdsrSource::Analytic));
    assert!(rounds[1].edsr <= rounds[0].edsr);
    assert!(rounds[2].edsr >= rounds[1].edsr);
    assert_eq!(rounds[2].edsr.to_bits(), rounds[3].edsr.to_bits());
    assert_eq!(rounds[3].jammer, JammerStrategy::Memory(5));

    let mut log = Vec::new();
    write_round_log(&rounds, &mut log).unwrap();
    let text = String::from_utf8(log).unwrap();
    assert!(text.starts_with(ROUND_LOG_HEADER));
    assert_eq!(text.lines().nth(3).unwrap().split(',').nth(2), Some("5"));
}

#[test]
fn multi_user_arms_race_orders_rounds() {
    let (rounds, _) = arms_race(&net(4), &rewards(), CollisionProtocol::AllHopping, &ArmsRaceOptions::new(&rewards()), 5).unwrap();
    assert!(rounds[2].edsr >= rounds[1].edsr);
    assert!(rounds.iter().all(|r| r.theta > 0.0 && r.stderr > 0.0));
}

#[test]
fn simulated_search_under_random_jamming_goes_long() {
    let opts = SearchOptions::new(4_000, &rewards());
    let s = best_threshold_by_simulation(&net(1), &rewards(), JammerStrategy::RANDOM, CollisionProtocol::AllHopping, &opts, 3).unwrap();
    assert!(s.policy.order_key() >= 11, "{:?}", s.policy);
    let values: Vec<_> = s.candidates.iter().map(|c| (c.edsr, c.stderr)).collect();
    for w in values.windows(2) {
        assert!(w[1].0 >= w[0].0 - 3.0 * w[0].1.hypot(w[1].1), "{values:?}");
    }
}
