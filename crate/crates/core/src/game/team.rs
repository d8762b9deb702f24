use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Index of an agent within a population of size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

/// Partition of a population into disjoint, non-empty teams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamStructure {
    teams: Vec<Vec<AgentId>>,
    team_of: Vec<usize>,
}

impl TeamStructure {
    /// Assigns agents to teams in contiguous index blocks: with sizes `[2, 2]`
    /// agents 0 and 1 form team 0 and agents 2 and 3 form team 1.
    pub fn contiguous(population: usize, team_sizes: &[usize]) -> Result<Self> {
        Self::validate(population, team_sizes)?;
        let order: Vec<usize> = (0..population).collect();
        Ok(Self::from_order(&order, team_sizes))
    }

    /// Same block layout as [`TeamStructure::contiguous`] but over a shuffled
    /// agent order.
    pub fn randomized<R: Rng + ?Sized>(
        population: usize,
        team_sizes: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        Self::validate(population, team_sizes)?;
        let mut order: Vec<usize> = (0..population).collect();
        order.shuffle(rng);
        Ok(Self::from_order(&order, team_sizes))
    }

    /// `population / team_size` equal teams. Fails unless the size divides
    /// the population.
    pub fn uniform(population: usize, team_size: usize) -> Result<Self> {
        if team_size == 0 || population % team_size != 0 {
            return Err(Error::Config(format!(
                "team size {team_size} does not divide population {population}"
            )));
        }
        Self::contiguous(population, &vec![team_size; population / team_size])
    }

    /// Everyone on one team.
    pub fn single(population: usize) -> Result<Self> {
        Self::contiguous(population, &[population])
    }

    fn validate(population: usize, team_sizes: &[usize]) -> Result<()> {
        if population == 0 {
            return Err(Error::Config("population must be positive".into()));
        }
        if team_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("team sizes must be positive".into()));
        }
        let total: usize = team_sizes.iter().sum();
        if total != population {
            return Err(Error::Config(format!(
                "team sizes sum to {total}, population is {population}"
            )));
        }
        Ok(())
    }

    fn from_order(order: &[usize], team_sizes: &[usize]) -> Self {
        let mut teams = Vec::with_capacity(team_sizes.len());
        let mut team_of = vec![0; order.len()];
        let mut cursor = 0;
        for (t, &size) in team_sizes.iter().enumerate() {
            let mut members: Vec<AgentId> =
                order[cursor..cursor + size].iter().map(|&i| AgentId(i)).collect();
            members.sort();
            for m in &members {
                team_of[m.0] = t;
            }
            teams.push(members);
            cursor += size;
        }
        TeamStructure { teams, team_of }
    }

    pub fn population(&self) -> usize {
        self.team_of.len()
    }

    pub fn num_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn teams(&self) -> &[Vec<AgentId>] {
        &self.teams
    }

    pub fn team_of(&self, agent: AgentId) -> usize {
        self.team_of[agent.0]
    }

    pub fn members(&self, team: usize) -> &[AgentId] {
        &self.teams[team]
    }

    /// `n = |T_i|` for the team containing `agent`.
    pub fn team_size_of(&self, agent: AgentId) -> usize {
        self.teams[self.team_of[agent.0]].len()
    }

    pub fn teammates(&self, agent: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.members(self.team_of(agent))
            .iter()
            .copied()
            .filter(move |&m| m != agent)
    }

    pub fn same_team(&self, a: AgentId, b: AgentId) -> bool {
        self.team_of[a.0] == self.team_of[b.0]
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.population()).map(AgentId)
    }
}
