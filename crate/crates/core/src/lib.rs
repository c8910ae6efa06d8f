//! Anti-jamming frequency-hopping game: per-user MDP solvers, a slot-level
//! network simulator, jammer models, best-response dynamics and
//! closed-form bounds.

pub mod analysis;
pub mod arms_race;
pub mod error;
pub mod format;
pub mod jammers;
pub mod mdp;
pub mod netsim;
pub mod params;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use jammers::{Jammer, JammerStrategy};
pub use mdp::{Action, MdpModel, StayingPolicy, TransitionKernel, UserState, ValueTable};
pub use netsim::{CollisionProtocol, Scenario, SimMetrics, SimOptions};
pub use params::{NetworkConfig, RewardParams};
