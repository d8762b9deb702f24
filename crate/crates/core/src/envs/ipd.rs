use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{AgentId, RewardVector, TeamStructure};

/// Cooperate or defect; coded as actions 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Cooperate,
    Defect,
}

impl Move {
    pub fn action(self) -> u8 {
        match self {
            Move::Cooperate => 0,
            Move::Defect => 1,
        }
    }

    pub fn from_action(a: u8) -> Result<Self> {
        match a {
            0 => Ok(Move::Cooperate),
            1 => Ok(Move::Defect),
            _ => Err(Error::Index {
                what: "ipd action",
                index: a as usize,
                limit: 2,
            }),
        }
    }

    pub fn is_cooperate(self) -> bool {
        self == Move::Cooperate
    }
}

/// Donation-game payoff of one player against one counterpart.
pub fn ipd_payoff(mine: Move, theirs: Move, cost: f64, benefit: f64) -> f64 {
    let received = if theirs.is_cooperate() { benefit } else { 0.0 };
    let paid = if mine.is_cooperate() { cost } else { 0.0 };
    received - paid
}

/// Settles a round under per-agent pairing: each cooperator pays `cost` and
/// its own counterpart receives `benefit`. An agent can receive several
/// donations, or none, in one round.
pub fn donation_payoff(pairing: &[AgentId], moves: &[Move], cost: f64, benefit: f64) -> Vec<f64> {
    let mut pay = vec![0.0; moves.len()];
    for (i, (&m, &to)) in moves.iter().zip(pairing).enumerate() {
        if m.is_cooperate() {
            pay[i] -= cost;
            pay[to.index()] += benefit;
        }
    }
    pay
}

/// Everything that happened in one IPD round.
#[derive(Debug, Clone, PartialEq)]
pub struct IpdRound {
    pub pairing: Vec<AgentId>,
    /// Counterpart's team index, as seen by each agent.
    pub observations: Vec<usize>,
    pub moves: Vec<Move>,
    pub rewards: RewardVector,
}

/// Team iterated prisoner's dilemma with random counterparts each round.
#[derive(Debug, Clone, PartialEq)]
pub struct IpdEnv {
    population: usize,
    cost: f64,
    benefit: f64,
    /// Probability of drawing a non-teammate.
    nu: f64,
}

impl IpdEnv {
    pub fn new(population: usize, cost: f64, benefit: f64, nu: f64) -> Result<Self> {
        if population < 2 {
            return Err(Error::Config(format!(
                "ipd needs at least 2 agents, got {population}"
            )));
        }
        if !(cost > 0.0 && benefit > cost) {
            return Err(Error::Config(format!(
                "ipd needs b > c > 0, got c={cost} b={benefit}"
            )));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Config(format!("ipd nu {nu} outside [0, 1]")));
        }
        Ok(IpdEnv {
            population,
            cost,
            benefit,
            nu,
        })
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn benefit(&self) -> f64 {
        self.benefit
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Draws a counterpart for every agent independently.
    ///
    /// With probability `nu` the counterpart is a uniformly drawn
    /// non-teammate, otherwise a uniformly drawn teammate. Agents never face
    /// themselves; when one pool is empty the other is used.
    pub fn draw_pairing<R: Rng + ?Sized>(
        &self,
        teams: &TeamStructure,
        rng: &mut R,
    ) -> Result<Vec<AgentId>> {
        if teams.population() != self.population {
            return Err(Error::Shape {
                what: "team structure",
                expected: self.population,
                got: teams.population(),
            });
        }
        let n = self.population;
        let mut pairing = Vec::with_capacity(n);
        for agent in teams.agents() {
            let team = teams.members(teams.team_of(agent));
            let mates = team.len() - 1;
            let others = n - team.len();
            let want_other = rng.gen::<f64>() < self.nu;
            let pick_other = (want_other && others > 0) || mates == 0;
            let counterpart = if pick_other {
                // k-th agent outside the team; team is a sorted index list
                let mut k = rng.gen_range(0..others);
                let mut idx = 0;
                loop {
                    if !teams.same_team(AgentId(idx), agent) {
                        if k == 0 {
                            break AgentId(idx);
                        }
                        k -= 1;
                    }
                    idx += 1;
                }
            } else {
                let k = rng.gen_range(0..mates);
                team.iter()
                    .copied()
                    .filter(|&m| m != agent)
                    .nth(k)
                    .expect("teammate index in range")
            };
            pairing.push(counterpart);
        }
        Ok(pairing)
    }

    /// Plays one round: draw pairing, let each agent choose from its
    /// observation, settle donations, then share within teams.
    pub fn round<R, P>(&self, teams: &TeamStructure, mut policy: P, rng: &mut R) -> Result<IpdRound>
    where
        R: Rng + ?Sized,
        P: FnMut(AgentId, usize, &mut R) -> Move,
    {
        let pairing = self.draw_pairing(teams, rng)?;
        let observations: Vec<usize> = pairing.iter().map(|&c| teams.team_of(c)).collect();
        let moves: Vec<Move> = teams
            .agents()
            .map(|a| policy(a, observations[a.index()], rng))
            .collect();
        let env = donation_payoff(&pairing, &moves, self.cost, self.benefit);
        let rewards = RewardVector::from_env(env, teams)?;
        Ok(IpdRound {
            pairing,
            observations,
            moves,
            rewards,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Move::{Cooperate as C, Defect as D};

    #[test]
    fn donation_matrix() {
        // enumerate all four outcomes for c=1, b=5
        let table = [(C, C, 4.0), (C, D, -1.0), (D, C, 5.0), (D, D, 0.0)];
        for (m, t, want) in table {
            assert_eq!(ipd_payoff(m, t, 1.0, 5.0), want);
        }
        // random play: average over the four equally likely outcomes
        let mean: f64 = table.iter().map(|&(m, t, _)| ipd_payoff(m, t, 1.0, 5.0)).sum::<f64>() / 4.0;
        assert_eq!(mean, 2.0);
    }

    #[test]
    fn singleton_defectors_earn_nothing() {
        let ts = TeamStructure::uniform(2, 1).unwrap();
        let env = IpdEnv::new(2, 1.0, 5.0, 0.97).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let round = env.round(&ts, |_, _, _| D, &mut rng).unwrap();
        assert_eq!(round.rewards.team_rewards, vec![0.0, 0.0]);
        assert_eq!(round.pairing, vec![AgentId(1), AgentId(0)]);
    }

    #[test]
    fn cooperating_pair_shares_four_each() {
        let ts = TeamStructure::single(2).unwrap();
        let env = IpdEnv::new(2, 1.0, 5.0, 0.97).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let round = env.round(&ts, |_, _, _| C, &mut rng).unwrap();
        assert_eq!(round.rewards.team_rewards, vec![4.0, 4.0]);
    }

    #[test]
    fn mixed_team_averages_payoffs() {
        let ts = TeamStructure::uniform(4, 2).unwrap();
        let pairing = vec![AgentId(2), AgentId(3), AgentId(0), AgentId(1)];
        let moves = vec![D, C, C, D];
        let env = donation_payoff(&pairing, &moves, 1.0, 5.0);
        assert_eq!(env, vec![5.0, -1.0, -1.0, 5.0]);
        let rv = RewardVector::from_env(env, &ts).unwrap();
        assert_eq!(rv.team_rewards, vec![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn total_payoff_counts_cooperators() {
        let ts = TeamStructure::uniform(12, 3).unwrap();
        let env = IpdEnv::new(12, 1.0, 5.0, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let round = env
                .round(&ts, |_, _, rng: &mut ChaCha8Rng| if rng.gen::<bool>() { C } else { D }, &mut rng)
                .unwrap();
            let coop = round.moves.iter().filter(|m| m.is_cooperate()).count() as f64;
            let total: f64 = round.rewards.env_rewards.iter().sum();
            assert!((total - coop * 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singletons_never_face_teammates() {
        let ts = TeamStructure::uniform(6, 1).unwrap();
        let env = IpdEnv::new(6, 1.0, 5.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            for (i, c) in env.draw_pairing(&ts, &mut rng).unwrap().into_iter().enumerate() {
                assert_ne!(c, AgentId(i));
            }
        }
    }

    #[test]
    fn nu_zero_always_pairs_teammates() {
        let ts = TeamStructure::uniform(6, 3).unwrap();
        let env = IpdEnv::new(6, 1.0, 5.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let p = env.draw_pairing(&ts, &mut rng).unwrap();
            for (i, c) in p.into_iter().enumerate() {
                assert!(ts.same_team(AgentId(i), c));
                assert_ne!(c, AgentId(i));
            }
        }
    }

    #[test]
    fn teammate_rate_matches_one_minus_nu() {
        let ts = TeamStructure::uniform(30, 2).unwrap();
        let env = IpdEnv::new(30, 1.0, 5.0, 0.97).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut mates = 0usize;
        let mut total = 0usize;
        // 1e6 agent-pairings
        while total < 1_000_000 {
            for (i, c) in env.draw_pairing(&ts, &mut rng).unwrap().into_iter().enumerate() {
                mates += ts.same_team(AgentId(i), c) as usize;
                total += 1;
            }
        }
        let rate = mates as f64 / total as f64;
        assert!((rate - 0.03).abs() < 0.001, "rate {rate}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(IpdEnv::new(1, 1.0, 5.0, 0.5).is_err());
        assert!(IpdEnv::new(4, 5.0, 1.0, 0.5).is_err());
        assert!(IpdEnv::new(4, 1.0, 5.0, 1.5).is_err());
    }
}
