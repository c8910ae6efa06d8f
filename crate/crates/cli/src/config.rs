//! Experiment configuration: a TOML file with dotted keys, overridable
//! from the command line.

use std::fmt;
use std::path::{Path, PathBuf};

use hopgame::mdp::StayingPolicy;
use hopgame::netsim::{CollisionProtocol, SimOptions, DEFAULT_THETA_HALFWIDTH, DEFAULT_WARMUP, HORIZON_TAIL_BOUND};
use hopgame::{JammerStrategy, NetworkConfig, RewardParams};
use serde::Deserialize;

/// A configuration problem, tied to the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<hopgame::Error> for ConfigError {
    fn from(e: hopgame::Error) -> Self {
        match e {
            hopgame::Error::InvalidParameter { field, reason } => ConfigError::new(field, reason),
            other => ConfigError::new("config", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub channels: usize,
    pub scan_width: usize,
    pub users: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            channels: 60,
            scan_width: 5,
            users: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardsSection {
    pub reward: f64,
    pub hop_cost: f64,
    pub jam_loss: f64,
    pub gamma: f64,
}

impl Default for RewardsSection {
    fn default() -> Self {
        Self {
            reward: 5.0,
            hop_cost: 5.0,
            jam_loss: 20.0,
            gamma: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub episodes: usize,
    /// Defaults to the shortest horizon meeting the truncation bound.
    pub horizon: Option<usize>,
    pub warmup: usize,
    pub theta_halfwidth: f64,
    pub detection_error_prob: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            horizon: None,
            warmup: DEFAULT_WARMUP,
            theta_halfwidth: DEFAULT_THETA_HALFWIDTH,
            detection_error_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PolicyValue {
    Threshold(usize),
    Name(String),
}

/// The file as written, before validation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub rewards: RewardsSection,
    pub protocol: String,
    pub jammer: String,
    /// A threshold, `inf`, or `optimize`.
    pub policy: PolicyValue,
    /// Inactive probability for `solve`; estimated when absent.
    pub theta: Option<f64>,
    pub seed: u64,
    pub sim: SimSection,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: NetworkSection::default(),
            rewards: RewardsSection::default(),
            protocol: "all-hopping".into(),
            jammer: "basic-sweep".into(),
            policy: PolicyValue::Name("optimize".into()),
            theta: None,
            seed: 1,
            sim: SimSection::default(),
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Optimize,
    Fixed(StayingPolicy),
}

impl fmt::Display for PolicyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyChoice::Optimize => f.write_str("optimize"),
            PolicyChoice::Fixed(p) => write!(f, "{p}"),
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub network: NetworkConfig,
    pub rewards: RewardParams,
    pub protocol: CollisionProtocol,
    pub jammer: JammerStrategy,
    pub policy: PolicyChoice,
    pub theta: Option<f64>,
    pub seed: u64,
    pub sim: SimOptions,
    pub theta_halfwidth: f64,
    pub detection_error_prob: f64,
    pub output: Option<PathBuf>,
    /// `key = value` lines echoed into output headers.
    pub echo: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn echo(&self) -> Vec<String> {
        let policy = match &self.policy {
            PolicyValue::Threshold(k) => k.to_string(),
            PolicyValue::Name(s) => s.clone(),
        };
        let mut lines = vec![
            format!("network.channels = {}", self.network.channels),
            format!("network.scan_width = {}", self.network.scan_width),
            format!("network.users = {}", self.network.users),
            format!("rewards.reward = {}", self.rewards.reward),
            format!("rewards.hop_cost = {}", self.rewards.hop_cost),
            format!("rewards.jam_loss = {}", self.rewards.jam_loss),
            format!("rewards.gamma = {}", self.rewards.gamma),
            format!("protocol = {}", self.protocol),
            format!("jammer = {}", self.jammer),
            format!("policy = {policy}"),
        ];
        if let Some(theta) = self.theta {
            lines.push(format!("theta = {theta}"));
        }
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("sim.episodes = {}", self.sim.episodes));
        if let Some(h) = self.sim.horizon {
            lines.push(format!("sim.horizon = {h}"));
        }
        lines.push(format!("sim.warmup = {}", self.sim.warmup));
        lines.push(format!("sim.theta_halfwidth = {}", self.sim.theta_halfwidth));
        lines.push(format!("sim.detection_error_prob = {}", self.sim.detection_error_prob));
        lines
    }

    /// Checks every key and builds the typed experiment.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let n = &self.network;
        let network = NetworkConfig::new(n.channels, n.scan_width, n.users)?;
        let r = &self.rewards;
        let rewards = RewardParams::new(r.reward, r.hop_cost, r.jam_loss, r.gamma)?;
        let protocol: CollisionProtocol = self.protocol.parse().map_err(|e| ConfigError::new("protocol", e))?;
        let jammer: JammerStrategy = self.jammer.parse().map_err(|e: String| ConfigError::new("jammer", e))?;
        jammer.validate(&network)?;
        let policy = match &self.policy {
            PolicyValue::Threshold(k) => PolicyChoice::Fixed(StayingPolicy::Threshold(*k)),
            PolicyValue::Name(s) if s.trim().eq_ignore_ascii_case("optimize") => PolicyChoice::Optimize,
            PolicyValue::Name(s) => {
                PolicyChoice::Fixed(s.parse().map_err(|e: String| ConfigError::new("policy", e))?)
            }
        };
        if let PolicyChoice::Fixed(StayingPolicy::Threshold(k)) = policy {
            if k >= network.period() {
                return Err(ConfigError::new(
                    "policy",
                    format!("threshold must be below T = {}, got {k}", network.period()),
                ));
            }
        }
        if let Some(theta) = self.theta {
            if !(0.0..=1.0).contains(&theta) || (network.users() == 1 && theta > 0.0) {
                return Err(ConfigError::new("theta", format!("{theta} is not a valid inactive probability for {network}")));
            }
        }
        let s = &self.sim;
        let mut sim = SimOptions::new(s.episodes, &rewards);
        sim.warmup = s.warmup;
        if let Some(h) = s.horizon {
            sim.horizon = h;
        }
        sim.validate(&rewards)?;
        if !(s.theta_halfwidth > 0.0 && s.theta_halfwidth < 0.5) {
            return Err(ConfigError::new("sim.theta_halfwidth", format!("must lie in (0, 0.5), got {}", s.theta_halfwidth)));
        }
        if !(0.0..=1.0).contains(&s.detection_error_prob) {
            return Err(ConfigError::new(
                "sim.detection_error_prob",
                format!("must lie in [0, 1], got {}", s.detection_error_prob),
            ));
        }
        Ok(Experiment {
            network,
            rewards,
            protocol,
            jammer,
            policy,
            theta: self.theta,
            seed: self.seed,
            sim,
            theta_halfwidth: s.theta_halfwidth,
            detection_error_prob: s.detection_error_prob,
            output: self.output.clone(),
            echo: self.echo(),
        })
    }
}

/// Smallest horizon accepted for `rewards`.
pub fn min_horizon(rewards: &RewardParams) -> usize {
    rewards.min_horizon(HORIZON_TAIL_BOUND)
}
