use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{
    fraction_of_optimal, optimal_occupancy, q_gap, visitation_metric, visitation_vs_optimal, MetricRow,
    MetricsTable, OptimalityBaseline,
};
use crate::envs::{EnvKind, Environment, FourStatesEnv, IpdEnv, Move, TwoStatesEnv};
use crate::error::{Error, Result};
use crate::game::{team_reward, JointAction, TeamStructure};
use crate::infotheory::{
    collect_return_samples, ProbeConfig, ProbeEnv, ReturnBinning, Sparsity, SparsityThresholds,
};
use crate::learners::{visit_weighted_entropy, QLearner};

/// Sparsity thresholds used for the `sparsity_flag` metric.
pub const DEFAULT_INFO_EPSILON: f64 = 0.01;
pub const DEFAULT_INFO_MU: f64 = 1e-4;

/// Independent stream for one (team size, trial) cell.
pub fn trial_rng(seed: u64, size_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((size_index as u64) << 32) | trial as u64);
    rng
}

/// Probe settings matching an experiment: one designated agent in the
/// experiment's population and team size, uniform play.
pub fn probe_config(cfg: &ExperimentConfig, team_size: usize, samples: usize) -> Result<ProbeConfig> {
    let (env, entropy_scale) = match cfg.env {
        EnvKind::TwoStates => (ProbeEnv::TwoStates { reward_r: cfg.reward_r }, cfg.reward_r),
        EnvKind::FourStates => (
            ProbeEnv::FourStates {
                reward_r: cfg.reward_r,
                slip_prob: cfg.slip_prob,
            },
            cfg.reward_r,
        ),
        EnvKind::Ipd => (
            ProbeEnv::Ipd {
                cost: cfg.ipd_cost,
                benefit: cfg.ipd_benefit,
                nu: cfg.ipd_nu,
            },
            cfg.ipd_benefit,
        ),
    };
    Ok(ProbeConfig {
        env,
        population: cfg.population_for(team_size),
        team_size,
        gamma: cfg.learner.gamma,
        horizon: cfg.info_horizon,
        samples,
        burn_in: 100,
        chunks: 8,
        binning: cfg.return_binning()?,
        entropy_binning: ReturnBinning::coarse_reward_grid(entropy_scale)?,
        min_per_pair: 30,
    })
}

/// Info-probe metric rows for one cell.
pub fn info_rows<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    team_size: usize,
    trial: usize,
    checkpoint: usize,
    th: &SparsityThresholds,
    rng: &mut R,
) -> Result<Vec<MetricRow>> {
    let pc = probe_config(cfg, team_size, cfg.info_rollouts)?;
    let report = collect_return_samples(&pc, rng)?.report(&pc)?;
    let sparse = report.classify(th).class == Sparsity::Sparse;
    let row = |metric: &str, value: f64| MetricRow {
        trial,
        team_size,
        checkpoint,
        metric: metric.into(),
        value,
    };
    Ok(vec![
        row("expected_info", report.expected_info),
        row("variance_info", report.variance_info),
        row("tr_entropy", report.tr_entropy),
        row("sparsity_flag", if sparse { 1.0 } else { 0.0 }),
    ])
}

struct Recorder {
    trial: usize,
    team_size: usize,
    rows: Vec<MetricRow>,
}

impl Recorder {
    fn push(&mut self, checkpoint: usize, metric: &str, value: f64) {
        self.rows.push(MetricRow {
            trial: self.trial,
            team_size: self.team_size,
            checkpoint,
            metric: metric.into(),
            value,
        });
    }

    /// Metrics shared by every environment, over a window of `episodes`.
    fn common(
        &mut self,
        checkpoint: usize,
        reward_sum: f64,
        episodes: usize,
        steps: usize,
        baseline: &OptimalityBaseline,
        learners: &mut [QLearner],
    ) -> Result<()> {
        let per_episode = reward_sum / episodes as f64;
        self.push(checkpoint, "mean_episode_reward", per_episode);
        self.push(checkpoint, "mean_step_reward", per_episode / steps as f64);
        self.push(
            checkpoint,
            "fraction_of_optimal",
            fraction_of_optimal(per_episode, baseline.per_episode(steps))?,
        );
        let tables: Vec<_> = learners.iter().map(|l| &l.table).collect();
        self.push(checkpoint, "q_gap", q_gap(&tables)?);
        let mut h = 0.0;
        for l in learners.iter_mut() {
            h += visit_weighted_entropy(&l.action_counts())?;
            l.reset_counts();
        }
        self.push(checkpoint, "policy_entropy", h / learners.len() as f64);
        Ok(())
    }
}

fn is_checkpoint(cfg: &ExperimentConfig, episode: usize) -> bool {
    episode % cfg.checkpoint_every == 0 || episode == cfg.episodes
}

fn signal_trial<E: Environment>(
    cfg: &ExperimentConfig,
    mut env: E,
    teams: &TeamStructure,
    rec: &mut Recorder,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let pop = env.population();
    let states = env.observation_count();
    let baseline = OptimalityBaseline::new(cfg.env, pop, cfg.reward_r, cfg.ipd_cost, cfg.ipd_benefit)?;
    let optimal = optimal_occupancy(cfg.env, pop)?;
    let mut learners = (0..pop)
        .map(|_| QLearner::new(states, env.action_count(), cfg.learner))
        .collect::<Result<Vec<_>>>()?;
    let mut obs = vec![0usize; pop];
    let mut next = vec![0usize; pop];
    let mut acts = vec![0u8; pop];
    let mut visits = vec![0u64; states];
    let mut window_reward = 0.0;
    let mut window_episodes = 0;
    for episode in 1..=cfg.episodes {
        env.reset(rng);
        for (i, o) in obs.iter_mut().enumerate() {
            *o = env.observe(crate::game::AgentId(i));
        }
        let mut episode_reward = 0.0;
        for _ in 0..cfg.steps_per_episode {
            for i in 0..pop {
                acts[i] = learners[i].act(obs[i], rng)? as u8;
                visits[obs[i]] += 1;
            }
            let env_r = env.step(&JointAction::new(acts.clone()), rng)?;
            let tr = team_reward(&env_r, teams)?;
            for i in 0..pop {
                next[i] = env.observe(crate::game::AgentId(i));
                learners[i].learn(obs[i], acts[i] as usize, tr[i], next[i])?;
            }
            episode_reward += tr.iter().sum::<f64>() / pop as f64;
            std::mem::swap(&mut obs, &mut next);
        }
        window_reward += episode_reward;
        window_episodes += 1;
        if is_checkpoint(cfg, episode) {
            rec.common(
                episode,
                window_reward,
                window_episodes,
                cfg.steps_per_episode,
                &baseline,
                &mut learners,
            )?;
            for (s, d) in visitation_vs_optimal(&visits, &optimal)?.into_iter().enumerate() {
                rec.push(episode, visitation_metric(s), d);
            }
            visits.iter_mut().for_each(|v| *v = 0);
            window_reward = 0.0;
            window_episodes = 0;
        }
    }
    Ok(())
}

fn ipd_trial(cfg: &ExperimentConfig, teams: &TeamStructure, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let pop = teams.population();
    let env = IpdEnv::new(pop, cfg.ipd_cost, cfg.ipd_benefit, cfg.ipd_nu)?;
    let baseline = OptimalityBaseline::new(cfg.env, pop, cfg.reward_r, cfg.ipd_cost, cfg.ipd_benefit)?;
    let mut learners = (0..pop)
        .map(|_| QLearner::new(teams.num_teams(), 2, cfg.learner))
        .collect::<Result<Vec<_>>>()?;
    let mut window_reward = 0.0;
    let mut window_episodes = 0;
    let mut cooperations = 0u64;
    let mut choices = 0u64;
    for episode in 1..=cfg.episodes {
        let mut episode_reward = 0.0;
        for _ in 0..cfg.steps_per_episode {
            let mut failure: Option<Error> = None;
            let round = env.round(
                teams,
                |agent, obs, rng: &mut ChaCha8Rng| match learners[agent.index()].act(obs, rng) {
                    Ok(a) if a == Move::Cooperate.action() as usize => Move::Cooperate,
                    Ok(_) => Move::Defect,
                    Err(e) => {
                        failure.get_or_insert(e);
                        Move::Defect
                    }
                },
                rng,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            for (i, l) in learners.iter_mut().enumerate() {
                let m = round.moves[i];
                l.learn_terminal(round.observations[i], m.action() as usize, round.rewards.team_rewards[i])?;
                cooperations += m.is_cooperate() as u64;
            }
            choices += pop as u64;
            episode_reward += round.rewards.team_rewards.iter().sum::<f64>() / pop as f64;
        }
        window_reward += episode_reward;
        window_episodes += 1;
        if is_checkpoint(cfg, episode) {
            rec.common(
                episode,
                window_reward,
                window_episodes,
                cfg.steps_per_episode,
                &baseline,
                &mut learners,
            )?;
            rec.push(episode, "cooperation_rate", cooperations as f64 / choices as f64);
            window_reward = 0.0;
            window_episodes = 0;
            cooperations = 0;
            choices = 0;
        }
    }
    Ok(())
}

/// Trains one population of learners and returns its metric rows: learning
/// metrics every checkpoint, then the info probe at the final checkpoint
/// unless `info_rollouts` is 0.
pub fn run_trial(cfg: &ExperimentConfig, team_size: usize, trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<MetricRow>> {
    let pop = cfg.population_for(team_size);
    let teams = TeamStructure::uniform(pop, team_size)?;
    let mut rec = Recorder {
        trial,
        team_size,
        rows: Vec::new(),
    };
    match cfg.env {
        EnvKind::TwoStates => signal_trial(cfg, TwoStatesEnv::new(pop, cfg.reward_r)?, &teams, &mut rec, rng)?,
        EnvKind::FourStates => signal_trial(
            cfg,
            FourStatesEnv::new(pop, cfg.reward_r, cfg.slip_prob)?,
            &teams,
            &mut rec,
            rng,
        )?,
        EnvKind::Ipd => ipd_trial(cfg, &teams, &mut rec, rng)?,
    }
    if cfg.info_rollouts > 0 {
        let th = SparsityThresholds::new(DEFAULT_INFO_EPSILON, DEFAULT_INFO_MU)?;
        rec.rows
            .extend(info_rows(cfg, team_size, trial, cfg.episodes, &th, rng)?);
    }
    Ok(rec.rows)
}

/// All trials for the team size at `size_index`, run in parallel and
/// returned in trial order.
pub fn run_team_size(cfg: &ExperimentConfig, size_index: usize) -> Result<Vec<MetricRow>> {
    let team_size = *cfg.team_sizes.get(size_index).ok_or(Error::Index {
        what: "team size",
        index: size_index,
        limit: cfg.team_sizes.len(),
    })?;
    let per_trial: Vec<Vec<MetricRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, team_size, trial, &mut trial_rng(cfg.seed, size_index, trial)))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Runs the listed team-size indices in order, handing each finished block
/// to `on_block` before starting the next.
pub fn run_blocks<F>(cfg: &ExperimentConfig, size_indices: &[usize], mut on_block: F) -> Result<MetricsTable>
where
    F: FnMut(usize, &[MetricRow]) -> Result<()>,
{
    cfg.validate()?;
    let mut table = MetricsTable::new();
    for &i in size_indices {
        let rows = run_team_size(cfg, i)?;
        on_block(cfg.team_sizes[i], &rows)?;
        table.extend(rows);
    }
    Ok(table)
}

/// Every team size of the sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    let all: Vec<usize> = (0..cfg.team_sizes.len()).collect();
    run_blocks(cfg, &all, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::load_config;

    fn small(env: &str) -> ExperimentConfig {
        load_config(&format!(
            "env = {env}\nteam_sizes = 1,2\ntrials = 2\nepisodes = 20\nsteps_per_episode = 20\ninfo_rollouts = 0\n"
        ))
        .unwrap()
    }

    #[test]
    fn rows_cover_every_checkpoint() {
        let t = run_experiment(&small("twostates")).unwrap();
        assert_eq!(t.team_sizes(), vec![1, 2]);
        let s = t.series("q_gap", 2);
        assert_eq!(s.keys().copied().collect::<Vec<_>>(), vec![10, 20]);
        assert!(s.values().all(|v| v.len() == 2));
        assert_eq!(t.final_values("visit_dev_sr", 1).len(), 2);
    }

    #[test]
    fn trials_are_deterministic_and_distinct() {
        let cfg = small("fourstates");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let f = a.final_values("mean_episode_reward", 2);
        assert_ne!(f[0], f[1]);
    }

    #[test]
    fn ipd_reports_cooperation() {
        let mut cfg = small("ipd");
        cfg.team_sizes = vec![5];
        let t = run_experiment(&cfg).unwrap();
        let c = t.final_values("cooperation_rate", 5);
        assert!(c.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn info_probe_rows_appended() {
        let mut cfg = small("twostates");
        cfg.info_rollouts = 2000;
        cfg.trials = 1;
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.final_values("expected_info", 2).len(), 1);
        let flag = t.final_values("sparsity_flag", 1);
        assert!(flag == vec![0.0] || flag == vec![1.0]);
    }

    #[test]
    fn partial_checkpoint_closes_the_run() {
        let mut cfg = small("twostates");
        cfg.episodes = 15;
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.series("q_gap", 1).keys().copied().collect::<Vec<_>>(), vec![10, 15]);
    }
}
