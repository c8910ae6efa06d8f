use rand::Rng;

use crate::error::{Error, Result};
use crate::jammers::{Jammer, JammerStrategy};
use crate::mdp::{streak_layout, Action, StateSpace, StayingPolicy, UserState};
use crate::params::NetworkConfig;
use crate::rng::{substream, SimRng};

use super::CollisionProtocol;

/// Result of a slot for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Success,
    Jammed,
    Inactive,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Jammed => "jammed",
            Outcome::Inactive => "inactive",
        }
    }
}

/// Everything a simulation run needs besides the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub config: NetworkConfig,
    pub jammer: JammerStrategy,
    pub protocol: CollisionProtocol,
    /// Policy of every user (of every user but the first when
    /// `focal_policy` is set).
    pub policy: StayingPolicy,
    /// Policy of user 0 when it deviates from the others.
    pub focal_policy: Option<StayingPolicy>,
    /// Probability that a user misjudges whether its slot was jammed.
    pub detection_error_prob: f64,
}

impl Scenario {
    pub fn new(
        config: NetworkConfig,
        jammer: JammerStrategy,
        protocol: CollisionProtocol,
        policy: StayingPolicy,
    ) -> Self {
        Self {
            config,
            jammer,
            protocol,
            policy,
            focal_policy: None,
            detection_error_prob: 0.0,
        }
    }

    /// User 0 plays `policy`, everyone else keeps the current one.
    pub fn with_focal(mut self, policy: StayingPolicy) -> Self {
        self.focal_policy = Some(policy);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.jammer.validate(&self.config)?;
        if !(0.0..=1.0).contains(&self.detection_error_prob) {
            return Err(Error::invalid(
                "sim.detection_error_prob",
                format!("must lie in [0, 1], got {}", self.detection_error_prob),
            ));
        }
        Ok(())
    }

    pub fn policy_of(&self, user: usize) -> StayingPolicy {
        match (user, self.focal_policy) {
            (0, Some(p)) => p,
            _ => self.policy,
        }
    }

    /// Users whose rewards and hops are measured.
    pub fn measured_users(&self) -> std::ops::Range<usize> {
        if self.focal_policy.is_some() {
            0..1
        } else {
            0..self.config.users()
        }
    }

    pub fn state_space(&self) -> StateSpace {
        let (cap, tail) = streak_layout(&self.config, self.jammer);
        StateSpace::new(self.config.users() > 1, cap, tail)
    }
}

/// One sender-receiver pair.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAgent {
    pub id: usize,
    pub channel: usize,
    /// Consecutive successful slots on `channel`; 0 right after a hop.
    pub streak: usize,
    pub last_outcome: Option<Outcome>,
    pub policy: StayingPolicy,
    /// Action chosen at the end of the previous slot; `Hop` marks a newcomer.
    pub next: Action,
}

/// Per-user record of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSlot {
    pub channel: usize,
    pub outcome: Outcome,
    pub state: UserState,
    pub action: Action,
}

#[derive(Debug, Clone, Default)]
pub struct SlotRecord {
    pub slot: u64,
    pub scan: Vec<usize>,
    pub detected: bool,
    pub users: Vec<UserSlot>,
}

/// Full network state. Randomness is split by role: the jammer, the
/// collision-avoidance lottery and each user draw from their own streams,
/// so changing one user's policy leaves the other streams aligned.
#[derive(Debug, Clone)]
pub struct World {
    scenario: Scenario,
    space: StateSpace,
    jammer: Jammer,
    agents: Vec<UserAgent>,
    slot: u64,
    jammer_rng: SimRng,
    protocol_rng: SimRng,
    user_rngs: Vec<SimRng>,
    occupant: Vec<Option<usize>>,
    arrivals: Vec<Vec<usize>>,
    touched: Vec<usize>,
    scanned: Vec<bool>,
    communicating: Vec<bool>,
    record: SlotRecord,
}

impl World {
    /// Every user starts as a newcomer on a uniform channel; the jammer
    /// starts with empty history.
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let config = scenario.config;
        let mut jammer_rng = substream(seed, 0);
        let protocol_rng = substream(seed, 1);
        let mut user_rngs: Vec<SimRng> = (0..config.users())
            .map(|i| substream(seed, 2 + i as u64))
            .collect();
        let jammer = Jammer::new(scenario.jammer, &config, &mut jammer_rng)?;
        let agents = user_rngs
            .iter_mut()
            .enumerate()
            .map(|(id, rng)| UserAgent {
                id,
                channel: rng.random_range(0..config.channels()),
                streak: 0,
                last_outcome: None,
                policy: scenario.policy_of(id),
                next: Action::Hop,
            })
            .collect();
        let m = config.channels();
        Ok(Self {
            space: scenario.state_space(),
            scenario,
            jammer,
            agents,
            slot: 0,
            jammer_rng,
            protocol_rng,
            user_rngs,
            occupant: vec![None; m],
            arrivals: vec![Vec::new(); m],
            touched: Vec::with_capacity(m),
            scanned: vec![false; m],
            communicating: vec![false; config.users()],
            record: SlotRecord::default(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn agents(&self) -> &[UserAgent] {
        &self.agents
    }

    pub fn jammer(&self) -> &Jammer {
        &self.jammer
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Slots simulated so far.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Runs sensing, collision avoidance, communication with jamming,
    /// detection and the action phase for one slot.
    pub fn step(&mut self) -> &SlotRecord {
        let n = self.agents.len();

        // Sensing: occupants keep their channel.
        for &c in &self.touched {
            self.occupant[c] = None;
            self.arrivals[c].clear();
        }
        self.touched.clear();
        for agent in &self.agents {
            if agent.next == Action::Stay {
                let c = agent.channel;
                assert!(
                    self.occupant[c].is_none(),
                    "slot {}: users {:?} and {} both occupy channel {c}",
                    self.slot,
                    self.occupant[c],
                    agent.id
                );
                self.occupant[c] = Some(agent.id);
                self.touched.push(c);
            }
        }
        self.communicating.iter_mut().for_each(|x| *x = false);
        for agent in &self.agents {
            match agent.next {
                Action::Stay => self.communicating[agent.id] = true,
                Action::Hop => {
                    let c = agent.channel;
                    if self.occupant[c].is_none() {
                        if self.arrivals[c].is_empty() {
                            self.touched.push(c);
                        }
                        self.arrivals[c].push(agent.id);
                    }
                }
            }
        }

        // Collision avoidance on channels that were silent during sensing.
        self.touched.sort_unstable();
        for &c in &self.touched {
            let arrivals = &self.arrivals[c];
            match arrivals.len() {
                0 => {}
                1 => self.communicating[arrivals[0]] = true,
                k => {
                    if self.scenario.protocol == CollisionProtocol::Random {
                        let winner = arrivals[self.protocol_rng.random_range(0..k)];
                        self.communicating[winner] = true;
                    }
                }
            }
        }

        // Communication and jamming.
        let scan = self.jammer.next_scan(&mut self.jammer_rng);
        for &c in &scan {
            self.scanned[c] = true;
        }
        self.record.users.clear();
        let mut detected = false;
        let eps = self.scenario.detection_error_prob;
        for (agent, rng) in self.agents.iter_mut().zip(&mut self.user_rngs) {
            let outcome = if !self.communicating[agent.id] {
                Outcome::Inactive
            } else if self.scanned[agent.channel] {
                detected = true;
                Outcome::Jammed
            } else {
                Outcome::Success
            };
            let perceived = match outcome {
                Outcome::Success if eps > 0.0 && rng.random_bool(eps) => Outcome::Jammed,
                Outcome::Jammed if eps > 0.0 && rng.random_bool(eps) => Outcome::Success,
                o => o,
            };

            // Action phase.
            let state = match perceived {
                Outcome::Success => {
                    agent.streak += 1;
                    self.space.streak_state(agent.streak)
                }
                Outcome::Jammed => UserState::Jammed,
                Outcome::Inactive => UserState::Inactive,
            };
            let action = if perceived == Outcome::Success && agent.policy.stays_at(agent.streak) {
                Action::Stay
            } else {
                Action::Hop
            };
            let channel = agent.channel;
            agent.last_outcome = Some(perceived);
            agent.next = action;
            if action == Action::Hop {
                agent.streak = 0;
                agent.channel = rng.random_range(0..self.occupant.len());
            }
            self.record.users.push(UserSlot {
                channel,
                outcome: perceived,
                state,
                action,
            });
        }
        for &c in &scan {
            self.scanned[c] = false;
        }

        // Detection takes effect from the next scan on.
        if detected {
            self.jammer.on_detection(&mut self.jammer_rng);
        }

        debug_assert_eq!(self.record.users.len(), n);
        self.record.slot = self.slot;
        self.record.detected = detected;
        self.record.scan = scan;
        self.slot += 1;
        &self.record
    }
}
