use rand::Rng;

use super::signal::resolve;
use super::Environment;
use crate::error::{Error, Result};
use crate::game::{AgentId, JointAction, JointState};

/// Two-state game plus two inert states (`s_3`, `s_4`) and slippery moves.
///
/// Action `k` heads for physical state `k`; choosing the current state is
/// "stay". A move lands on its target with probability `1 - slip_prob` and
/// otherwise on one of the three other states, uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct FourStatesEnv {
    reward_r: f64,
    slip_prob: f64,
    positions: Vec<u8>,
    signal: bool,
}

pub const FOUR: usize = 4;

impl FourStatesEnv {
    pub fn new(population: usize, reward_r: f64, slip_prob: f64) -> Result<Self> {
        if population == 0 {
            return Err(Error::Config("population must be positive".into()));
        }
        if !(reward_r > 0.0) {
            return Err(Error::Config(format!("reward r must be positive, got {reward_r}")));
        }
        if !(0.0..=1.0).contains(&slip_prob) {
            return Err(Error::Config(format!("slip probability {slip_prob} outside [0, 1]")));
        }
        Ok(FourStatesEnv {
            reward_r,
            slip_prob,
            positions: vec![0; population],
            signal: false,
        })
    }

    pub fn set_state(&mut self, positions: Vec<u8>, signal: bool) -> Result<()> {
        if positions.len() != self.positions.len() {
            return Err(Error::Shape {
                what: "positions",
                expected: self.positions.len(),
                got: positions.len(),
            });
        }
        if let Some(&p) = positions.iter().find(|&&p| p as usize >= FOUR) {
            return Err(Error::Index {
                what: "physical state",
                index: p as usize,
                limit: FOUR,
            });
        }
        self.positions = positions;
        self.signal = signal;
        Ok(())
    }

    pub fn positions(&self) -> &[u8] {
        &self.positions
    }

    pub fn signal(&self) -> bool {
        self.signal
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip_prob
    }

    /// Landing probabilities for a move aimed at `target`.
    pub fn landing_distribution(slip_prob: f64, target: u8) -> [f64; FOUR] {
        let mut d = [slip_prob / 3.0; FOUR];
        d[target as usize] = 1.0 - slip_prob;
        d
    }

    pub fn sample_landing<R: Rng + ?Sized>(slip_prob: f64, target: u8, rng: &mut R) -> u8 {
        if rng.gen::<f64>() < 1.0 - slip_prob {
            return target;
        }
        let k = rng.gen_range(0..FOUR as u8 - 1);
        if k >= target {
            k + 1
        } else {
            k
        }
    }
}

impl Environment for FourStatesEnv {
    fn population(&self) -> usize {
        self.positions.len()
    }

    fn observation_count(&self) -> usize {
        FOUR
    }

    fn action_count(&self) -> usize {
        FOUR
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in &mut self.positions {
            *p = rng.gen_range(0..FOUR as u8);
        }
        self.signal = false;
    }

    fn observe(&self, agent: AgentId) -> usize {
        self.positions[agent.index()] as usize
    }

    fn joint_state(&self) -> JointState {
        JointState::new(self.positions.clone(), Some(self.signal))
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &JointAction, rng: &mut R) -> Result<Vec<f64>> {
        action.validate(self.positions.len(), FOUR)?;
        let landing: Vec<u8> = action
            .per_agent
            .iter()
            .map(|&target| Self::sample_landing(self.slip_prob, target, rng))
            .collect();
        let (rewards, next_signal) = resolve(&landing, self.signal, self.reward_r);
        self.positions = landing;
        self.signal = next_signal;
        Ok(rewards)
    }
}
