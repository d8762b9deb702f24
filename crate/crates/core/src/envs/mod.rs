//! The concrete stochastic games: the two-state signal game, its four-state
//! extension with slip, and the team iterated prisoner's dilemma.

mod four_states;
mod ipd;
mod signal;
mod two_states;

pub use four_states::FourStatesEnv;
pub use ipd::{donation_payoff, ipd_payoff, IpdEnv, IpdRound, Move};
pub use signal::{settle_signal, SignalSettlement, S_3, S_4, S_C, S_R};
pub use two_states::{TwoStatesEnv, MOVE, STAY};

use rand::Rng;

use crate::error::Result;
use crate::game::{AgentId, JointAction, JointState};

/// A simultaneous-move environment whose agents each observe one small
/// integer and pick one of `action_count` actions.
pub trait Environment {
    fn population(&self) -> usize;

    fn observation_count(&self) -> usize;

    fn action_count(&self) -> usize;

    /// Starts a new episode.
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R);

    fn observe(&self, agent: AgentId) -> usize;

    fn joint_state(&self) -> JointState;

    /// Applies a joint action and returns per-agent environmental rewards.
    fn step<R: Rng + ?Sized>(&mut self, action: &JointAction, rng: &mut R) -> Result<Vec<f64>>;
}

/// Which environment a configuration selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    TwoStates,
    FourStates,
    Ipd,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::TwoStates => "twostates",
            EnvKind::FourStates => "fourstates",
            EnvKind::Ipd => "ipd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "twostates" => Some(EnvKind::TwoStates),
            "fourstates" => Some(EnvKind::FourStates),
            "ipd" => Some(EnvKind::Ipd),
            _ => None,
        }
    }

    /// Number of physical states for the signal games.
    pub fn physical_states(self) -> Option<usize> {
        match self {
            EnvKind::TwoStates => Some(2),
            EnvKind::FourStates => Some(4),
            EnvKind::Ipd => None,
        }
    }
}
