use super::{discounted_return, AgentId, JointAction, JointState, RewardVector};
use crate::error::{Error, Result};

/// One transition `(s, a, rewards, s')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: JointState,
    pub action: JointAction,
    pub rewards: RewardVector,
    pub next: JointState,
}

/// Per-trial record of a joint trajectory. Steps are indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    population: usize,
    gamma: f64,
    steps: Vec<Step>,
}

impl TrajectoryLog {
    pub fn new(population: usize, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!("discount {gamma} outside (0, 1]")));
        }
        Ok(TrajectoryLog {
            population,
            gamma,
            steps: Vec::new(),
        })
    }

    pub fn append(
        &mut self,
        state: JointState,
        action: JointAction,
        rewards: RewardVector,
        next: JointState,
    ) -> Result<()> {
        let n = self.population;
        for (what, got) in [
            ("state", state.len()),
            ("action", action.per_agent.len()),
            ("env rewards", rewards.env_rewards.len()),
            ("team rewards", rewards.team_rewards.len()),
            ("next state", next.len()),
        ] {
            if got != n {
                return Err(Error::Shape {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        self.steps.push(Step {
            state,
            action,
            rewards,
            next,
        });
        Ok(())
    }

    /// Horizon `H`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> Option<&Step> {
        self.steps.get(t)
    }

    /// Steps strictly before `t` (the prefix leading up to step `t`).
    pub fn prefix(&self, t: usize) -> &[Step] {
        &self.steps[..t.min(self.steps.len())]
    }

    /// Every step except `t`.
    pub fn excluding(&self, t: usize) -> Vec<&Step> {
        self.steps
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != t)
            .map(|(_, s)| s)
            .collect()
    }

    pub fn team_rewards_of(&self, agent: AgentId) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.rewards.team_rewards[agent.index()])
            .collect()
    }

    /// Discounted team return of `agent` from step `start` to the end.
    pub fn team_return(&self, agent: AgentId, start: usize) -> f64 {
        discounted_return(&self.team_rewards_of(agent), self.gamma, start)
    }
}
