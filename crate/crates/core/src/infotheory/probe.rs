use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::binning::ReturnBinning;
use super::estimators::{InfoReport, SparsityThresholds};
use super::table::{ReturnDistributionTable, ReturnSample};
use crate::envs::{Environment, FourStatesEnv, IpdEnv, Move, TwoStatesEnv};
use crate::error::{Error, Result};
use crate::game::{team_reward, AgentId, JointAction, TeamStructure};
use crate::learners::uniform_random_policy;

/// Environment family and parameters for an information probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeEnv {
    TwoStates { reward_r: f64 },
    FourStates { reward_r: f64, slip_prob: f64 },
    Ipd { cost: f64, benefit: f64, nu: f64 },
}

/// Sampling set-up for [`collect_return_samples`]. Agent 0 is the
/// designated agent; every agent follows the uniform random policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub env: ProbeEnv,
    pub population: usize,
    pub team_size: usize,
    pub gamma: f64,
    /// Steps summed into each return.
    pub horizon: usize,
    /// Return windows to collect in total.
    pub samples: usize,
    /// Steps discarded at the start of each chunk.
    pub burn_in: usize,
    /// Independent trajectories, each on its own RNG stream.
    pub chunks: usize,
    pub binning: ReturnBinning,
    pub entropy_binning: ReturnBinning,
    pub min_per_pair: u64,
}

impl ProbeConfig {
    /// Two-state probe with one team of `n` and the default binnings for a
    /// sweep whose largest team is `n_max`.
    pub fn two_states(n: usize, n_max: usize, samples: usize) -> Result<Self> {
        Ok(ProbeConfig {
            env: ProbeEnv::TwoStates { reward_r: 1.0 },
            population: n,
            team_size: n,
            gamma: 0.9,
            horizon: 50,
            samples,
            burn_in: 100,
            chunks: 8,
            binning: ReturnBinning::for_team_lattice(1.0, n_max)?,
            entropy_binning: ReturnBinning::coarse_reward_grid(1.0)?,
            min_per_pair: 30,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.team_size == 0 || self.population == 0 || self.population % self.team_size != 0 {
            bad.push(format!(
                "team size {} must divide population {}",
                self.team_size, self.population
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            bad.push(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if self.horizon == 0 {
            bad.push("info horizon must be positive".into());
        }
        if self.samples == 0 {
            bad.push("info rollouts must be positive".into());
        }
        if self.chunks == 0 {
            bad.push("chunk count must be positive".into());
        }
        if matches!(self.env, ProbeEnv::Ipd { .. }) && self.population < 2 {
            bad.push("ipd probe needs at least 2 agents".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self.env {
            ProbeEnv::TwoStates { .. } => (2, 2),
            ProbeEnv::FourStates { .. } => (4, 4),
            ProbeEnv::Ipd { .. } => (self.population / self.team_size, 2),
        }
    }
}

/// Raw probe output: return samples, their table, and agent 0's per-step
/// team rewards over the same windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSamples {
    pub table: ReturnDistributionTable,
    pub samples: Vec<ReturnSample>,
    pub rewards: Vec<f64>,
}

impl ProbeSamples {
    pub fn report(&self, cfg: &ProbeConfig) -> Result<InfoReport> {
        InfoReport::build(&self.table, &self.rewards, &cfg.entropy_binning, 1)
    }
}

/// Per-step record for agent 0: observation, action, team reward.
type StepRecord = (usize, usize, f64);

fn simulate_signal<E: Environment>(
    mut env: E,
    teams: &TeamStructure,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<StepRecord>> {
    let actions = env.action_count() as u8;
    env.reset(rng);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let obs = env.observe(AgentId(0));
        let joint = JointAction::new((0..env.population()).map(|_| rng.gen_range(0..actions)).collect());
        let a0 = joint.per_agent[0] as usize;
        let env_r = env.step(&joint, rng)?;
        let tr = team_reward(&env_r, teams)?;
        out.push((obs, a0, tr[0]));
    }
    Ok(out)
}

fn simulate_ipd(env: &IpdEnv, teams: &TeamStructure, steps: usize, rng: &mut ChaCha8Rng) -> Result<Vec<StepRecord>> {
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let round = env.round(
            teams,
            |_, _, rng: &mut ChaCha8Rng| if rng.gen::<bool>() { Move::Cooperate } else { Move::Defect },
            rng,
        )?;
        out.push((
            round.observations[0],
            round.moves[0].action() as usize,
            round.rewards.team_rewards[0],
        ));
    }
    Ok(out)
}

fn run_chunk(cfg: &ProbeConfig, teams: &TeamStructure, len: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<ReturnSample>, Vec<f64>)> {
    let steps = cfg.burn_in + len + cfg.horizon;
    let trace = match cfg.env {
        ProbeEnv::TwoStates { reward_r } => {
            simulate_signal(TwoStatesEnv::new(cfg.population, reward_r)?, teams, steps, rng)?
        }
        ProbeEnv::FourStates { reward_r, slip_prob } => simulate_signal(
            FourStatesEnv::new(cfg.population, reward_r, slip_prob)?,
            teams,
            steps,
            rng,
        )?,
        ProbeEnv::Ipd { cost, benefit, nu } => {
            simulate_ipd(&IpdEnv::new(cfg.population, cost, benefit, nu)?, teams, steps, rng)?
        }
    };
    let mut samples = Vec::with_capacity(len);
    let mut rewards = Vec::with_capacity(len);
    for t in cfg.burn_in..cfg.burn_in + len {
        let mut z = 0.0;
        let mut d = 1.0;
        for &(_, _, r) in &trace[t..t + cfg.horizon] {
            z += d * r;
            d *= cfg.gamma;
        }
        let (state, action, r) = trace[t];
        samples.push(ReturnSample { state, action, z });
        rewards.push(r);
    }
    Ok((samples, rewards))
}

/// Collects `H`-step discounted team-reward returns for agent 0 from long
/// stationary trajectories under uniform random play.
///
/// Sliding windows over each chunk's trajectory give one sample per step;
/// chunks run in parallel on independent streams of a seed drawn from `rng`
/// and are merged in chunk order.
pub fn collect_return_samples<R: Rng + ?Sized>(cfg: &ProbeConfig, rng: &mut R) -> Result<ProbeSamples> {
    cfg.validate()?;
    let teams = TeamStructure::uniform(cfg.population, cfg.team_size)?;
    let (states, actions) = cfg.shape();
    let base: u64 = rng.gen();
    let per_chunk = cfg.samples.div_ceil(cfg.chunks);
    let chunks: Vec<(Vec<ReturnSample>, Vec<f64>)> = (0..cfg.chunks)
        .into_par_iter()
        .map(|i| {
            let len = per_chunk.min(cfg.samples.saturating_sub(i * per_chunk));
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(i as u64);
            run_chunk(cfg, &teams, len, &mut r)
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(cfg.samples);
    let mut rewards = Vec::with_capacity(cfg.samples);
    for (s, r) in chunks {
        samples.extend(s);
        rewards.extend(r);
    }
    let table = ReturnDistributionTable::from_samples(
        states,
        actions,
        cfg.binning,
        uniform_random_policy(actions)?,
        cfg.min_per_pair,
        &samples,
    )?;
    Ok(ProbeSamples {
        table,
        samples,
        rewards,
    })
}

/// Largest candidate team size whose probe still carries information:
/// `expected_info > ε` and `variance_of_info > μ`. `None` if no candidate
/// qualifies.
pub fn max_informative_team_size<R, F>(
    candidates: &[usize],
    th: &SparsityThresholds,
    make_config: F,
    rng: &mut R,
) -> Result<Option<usize>>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> Result<ProbeConfig>,
{
    SparsityThresholds::new(th.epsilon, th.mu)?;
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("candidate team sizes must be strictly ascending".into()));
    }
    let mut best = None;
    for &n in candidates {
        let cfg = make_config(n)?;
        let probe = collect_return_samples(&cfg, rng)?;
        let report = probe.report(&cfg)?;
        if report.expected_info > th.epsilon && report.variance_info > th.mu {
            best = Some(n);
        }
    }
    Ok(best)
}
