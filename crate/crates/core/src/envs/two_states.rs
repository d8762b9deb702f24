use rand::Rng;

use super::signal::{resolve, S_C, S_R};
use super::Environment;
use crate::error::{Error, Result};
use crate::game::{AgentId, JointAction, JointState};

/// Keep the current physical state.
pub const STAY: u8 = 0;
/// Switch to the other physical state.
pub const MOVE: u8 = 1;

/// Two physical states (`s_c`, `s_r`) and a hidden binary signal.
/// Transitions are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStatesEnv {
    reward_r: f64,
    positions: Vec<u8>,
    signal: bool,
}

impl TwoStatesEnv {
    pub fn new(population: usize, reward_r: f64) -> Result<Self> {
        if population == 0 {
            return Err(Error::Config("population must be positive".into()));
        }
        if !(reward_r > 0.0) {
            return Err(Error::Config(format!("reward r must be positive, got {reward_r}")));
        }
        Ok(TwoStatesEnv {
            reward_r,
            positions: vec![S_C; population],
            signal: false,
        })
    }

    /// Places agents explicitly, e.g. to replay a joint policy.
    pub fn set_state(&mut self, positions: Vec<u8>, signal: bool) -> Result<()> {
        if positions.len() != self.positions.len() {
            return Err(Error::Shape {
                what: "positions",
                expected: self.positions.len(),
                got: positions.len(),
            });
        }
        if let Some(&p) = positions.iter().find(|&&p| p > S_R) {
            return Err(Error::Index {
                what: "physical state",
                index: p as usize,
                limit: 2,
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

    pub fn reward_r(&self) -> f64 {
        self.reward_r
    }

    pub fn next_position(position: u8, action: u8) -> u8 {
        if action == MOVE {
            1 - position
        } else {
            position
        }
    }

    /// Deterministic step without touching an RNG.
    pub fn apply(&mut self, action: &JointAction) -> Result<Vec<f64>> {
        action.validate(self.positions.len(), 2)?;
        let landing: Vec<u8> = self
            .positions
            .iter()
            .zip(&action.per_agent)
            .map(|(&p, &a)| Self::next_position(p, a))
            .collect();
        let (rewards, next_signal) = resolve(&landing, self.signal, self.reward_r);
        self.positions = landing;
        self.signal = next_signal;
        Ok(rewards)
    }
}

impl Environment for TwoStatesEnv {
    fn population(&self) -> usize {
        self.positions.len()
    }

    fn observation_count(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for p in &mut self.positions {
            *p = rng.gen_range(0..2);
        }
        self.signal = false;
    }

    fn observe(&self, agent: AgentId) -> usize {
        self.positions[agent.index()] as usize
    }

    fn joint_state(&self) -> JointState {
        JointState::new(self.positions.clone(), Some(self.signal))
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &JointAction, _rng: &mut R) -> Result<Vec<f64>> {
        self.apply(action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(positions: Vec<u8>, signal: bool) -> TwoStatesEnv {
        let mut e = TwoStatesEnv::new(positions.len(), 1.0).unwrap();
        e.set_state(positions, signal).unwrap();
        e
    }

    #[test]
    fn single_agent_collects_after_cue() {
        let mut e = env(vec![S_C], true);
        let r = e.apply(&JointAction::new(vec![MOVE])).unwrap();
        assert_eq!(r, vec![1.0]);
        assert_eq!(e.positions(), &[S_R]);
        // consumed, nobody on s_c
        assert!(!e.signal());
        let r = e.apply(&JointAction::new(vec![STAY])).unwrap();
        assert_eq!(r, vec![0.0]);
    }

    #[test]
    fn cue_arrival_never_pays() {
        let mut e = env(vec![S_R, S_C], true);
        let r = e.apply(&JointAction::new(vec![MOVE, STAY])).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
        assert!(e.signal());
    }

    #[test]
    fn both_on_reward_state_collect_two_r() {
        let mut e = env(vec![S_R, S_R], true);
        let r = e.apply(&JointAction::new(vec![STAY, STAY])).unwrap();
        assert_eq!(r.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn stay_put_split_pays_every_step() {
        let mut e = env(vec![S_C, S_R], true);
        for _ in 0..5 {
            let r = e.apply(&JointAction::new(vec![STAY, STAY])).unwrap();
            assert_eq!(r, vec![0.0, 1.0]);
        }
    }

    #[test]
    fn invalid_action_rejected() {
        let mut e = env(vec![S_C], false);
        assert!(matches!(
            e.apply(&JointAction::new(vec![2])),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn signal_soundness_and_occupancy_on_random_play() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut e = TwoStatesEnv::new(3, 1.0).unwrap();
        e.reset(&mut rng);
        for _ in 0..2000 {
            let before = e.signal();
            let a = JointAction::new((0..3).map(|_| rng.gen_range(0..2)).collect());
            let r = e.step(&a, &mut rng).unwrap();
            if !before {
                assert!(r.iter().all(|&x| x == 0.0));
            }
            if e.positions().contains(&S_C) {
                assert!(e.signal());
            }
            if r.iter().any(|&x| x > 0.0) && !e.positions().contains(&S_C) {
                assert!(!e.signal());
            }
        }
    }
}
