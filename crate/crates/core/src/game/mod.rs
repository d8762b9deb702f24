//! Stochastic-game building blocks shared by every environment: agents,
//! teams, joint states and actions, the team-reward channel and returns.
//!
//! Individual states and actions are small non-negative integers; each
//! environment publishes its own coding table.

mod team;
mod trajectory;

pub use team::{AgentId, TeamStructure};
pub use trajectory::{Step, TrajectoryLog};

use crate::error::{Error, Result};

/// Per-agent individual states plus the environment's global flag, if any.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointState {
    pub per_agent: Vec<u8>,
    /// Binary signal `c` for the signal-gated environments.
    pub signal: Option<bool>,
}

impl JointState {
    pub fn new(per_agent: Vec<u8>, signal: Option<bool>) -> Self {
        JointState { per_agent, signal }
    }

    pub fn len(&self) -> usize {
        self.per_agent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_agent.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub per_agent: Vec<u8>,
}

impl JointAction {
    pub fn new(per_agent: Vec<u8>) -> Self {
        JointAction { per_agent }
    }

    /// Checks population size and that every action is below `action_count`.
    pub fn validate(&self, population: usize, action_count: usize) -> Result<()> {
        if self.per_agent.len() != population {
            return Err(Error::Shape {
                what: "joint action",
                expected: population,
                got: self.per_agent.len(),
            });
        }
        if let Some(&a) = self.per_agent.iter().find(|&&a| a as usize >= action_count) {
            return Err(Error::Index {
                what: "action",
                index: a as usize,
                limit: action_count,
            });
        }
        Ok(())
    }
}

/// A reward-sharing rule turning environmental rewards into team rewards.
///
/// Every member of a team must receive some share; only [`MeanSharing`] is
/// calibrated against reported numbers.
pub trait RewardSharing {
    fn share(&self, env_rewards: &[f64], teams: &TeamStructure) -> Vec<f64>;
}

/// Teammates split the summed environmental reward equally.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanSharing;

impl RewardSharing for MeanSharing {
    fn share(&self, env_rewards: &[f64], teams: &TeamStructure) -> Vec<f64> {
        let mut out = vec![0.0; env_rewards.len()];
        for members in teams.teams() {
            // plain left-to-right sum, then divide
            let mut total = 0.0;
            for m in members {
                total += env_rewards[m.index()];
            }
            let share = total / members.len() as f64;
            for m in members {
                out[m.index()] = share;
            }
        }
        out
    }
}

/// Environmental and team rewards for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    pub env_rewards: Vec<f64>,
    pub team_rewards: Vec<f64>,
}

impl RewardVector {
    /// Applies mean sharing to `env_rewards`.
    pub fn from_env(env_rewards: Vec<f64>, teams: &TeamStructure) -> Result<Self> {
        let team_rewards = team_reward(&env_rewards, teams)?;
        Ok(RewardVector {
            env_rewards,
            team_rewards,
        })
    }

    pub fn with_sharing(
        env_rewards: Vec<f64>,
        teams: &TeamStructure,
        rule: &dyn RewardSharing,
    ) -> Result<Self> {
        check_population(&env_rewards, teams)?;
        let team_rewards = rule.share(&env_rewards, teams);
        Ok(RewardVector {
            env_rewards,
            team_rewards,
        })
    }
}

fn check_population(env_rewards: &[f64], teams: &TeamStructure) -> Result<()> {
    if env_rewards.len() != teams.population() {
        return Err(Error::Shape {
            what: "reward vector",
            expected: teams.population(),
            got: env_rewards.len(),
        });
    }
    Ok(())
}

/// `TR_i = (sum of env rewards over i's team) / n` for every agent.
pub fn team_reward(env_rewards: &[f64], teams: &TeamStructure) -> Result<Vec<f64>> {
    check_population(env_rewards, teams)?;
    Ok(MeanSharing.share(env_rewards, teams))
}

/// Discounted sum of `rewards[start..]`, with `rewards[start]` undiscounted.
pub fn discounted_return(rewards: &[f64], gamma: f64, start: usize) -> f64 {
    let mut acc = 0.0;
    for &r in rewards.get(start..).unwrap_or(&[]).iter().rev() {
        acc = r + gamma * acc;
    }
    acc
}
