use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envs::{EnvKind, Environment, FourStatesEnv, TwoStatesEnv, S_C, S_R};
use crate::error::{Error, Result};
use crate::game::{AgentId, JointAction};

/// Parameters of a signal game simulated under uniform random play.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalGame {
    pub kind: EnvKind,
    pub reward_r: f64,
    pub slip_prob: f64,
}

impl SignalGame {
    pub fn two_states() -> Self {
        SignalGame {
            kind: EnvKind::TwoStates,
            reward_r: 1.0,
            slip_prob: 0.0,
        }
    }

    pub fn four_states() -> Self {
        SignalGame {
            kind: EnvKind::FourStates,
            reward_r: 1.0,
            slip_prob: 0.1,
        }
    }
}

/// What happened in a step where agent 0 landed on `s_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CueEvent {
    team_reward: f64,
    teammate_on_reward: bool,
    teammate_paid: bool,
}

#[derive(Debug, Default)]
struct ChunkOut {
    events: Vec<CueEvent>,
    agent_sum: f64,
    agent_sq: f64,
    agent_steps: u64,
}

const BURN_IN: usize = 100;
const CHUNKS: usize = 8;

fn run_chunk<E: Environment>(mut env: E, target: usize, rng: &mut ChaCha8Rng) -> Result<ChunkOut> {
    let n = env.population();
    let actions = env.action_count() as u8;
    env.reset(rng);
    let mut out = ChunkOut::default();
    let mut t = 0usize;
    // a single agent on s_c is an event every other step at worst
    let cap = BURN_IN + 1000 * target.max(1);
    while out.events.len() < target {
        if t > cap {
            return Err(Error::Estimation("cue events too rare to reach the requested count".into()));
        }
        let joint = JointAction::new((0..n).map(|_| rng.gen_range(0..actions)).collect());
        let r = env.step(&joint, rng)?;
        t += 1;
        if t <= BURN_IN {
            continue;
        }
        for &x in &r {
            out.agent_sum += x;
            out.agent_sq += x * x;
        }
        out.agent_steps += n as u64;
        if env.observe(AgentId(0)) == S_C as usize {
            out.events.push(CueEvent {
                team_reward: r.iter().sum::<f64>() / n as f64,
                teammate_on_reward: (1..n).any(|j| env.observe(AgentId(j)) == S_R as usize),
                teammate_paid: r[1..].iter().any(|&x| x > 0.0),
            });
        }
    }
    Ok(out)
}

/// One team of `n` agents playing uniformly at random; collects at least
/// `min_events` steps where agent 0 lands on `s_c`, over parallel chunks on
/// independent streams merged in chunk order.
fn collect(game: &SignalGame, n: usize, min_events: usize, rng: &mut (impl Rng + ?Sized)) -> Result<ChunkOut> {
    if n == 0 {
        return Err(Error::Config("team size must be positive".into()));
    }
    if min_events == 0 {
        return Err(Error::Config("need at least one conditioning event".into()));
    }
    let base: u64 = rng.gen();
    let per = min_events.div_ceil(CHUNKS);
    let parts: Vec<ChunkOut> = (0..CHUNKS)
        .into_par_iter()
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(i as u64);
            match game.kind {
                EnvKind::TwoStates => run_chunk(TwoStatesEnv::new(n, game.reward_r)?, per, &mut r),
                EnvKind::FourStates => {
                    run_chunk(FourStatesEnv::new(n, game.reward_r, game.slip_prob)?, per, &mut r)
                }
                EnvKind::Ipd => Err(Error::Config("cue events need a signal game".into())),
            }
        })
        .collect::<Result<_>>()?;
    let mut all = ChunkOut::default();
    for p in parts {
        all.events.extend(p.events);
        all.agent_sum += p.agent_sum;
        all.agent_sq += p.agent_sq;
        all.agent_steps += p.agent_steps;
    }
    Ok(all)
}

fn proportion(hits: usize, total: usize) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeammateEstimate {
    pub n: usize,
    pub events: usize,
    /// Some teammate occupies `s_r`, whatever the signal.
    pub p_any: f64,
    pub se_any: f64,
    /// Some teammate was actually paid that step.
    pub p_paid: f64,
    pub se_paid: f64,
}

/// Frequency, over steps where agent 0 lands on `s_c`, that at least one
/// teammate is on `s_r`.
pub fn mc_teammate_in_reward_state<R: Rng + ?Sized>(
    game: &SignalGame,
    n: usize,
    min_events: usize,
    rng: &mut R,
) -> Result<TeammateEstimate> {
    let out = collect(game, n, min_events, rng)?;
    let events = out.events.len();
    let (p_any, se_any) = proportion(out.events.iter().filter(|e| e.teammate_on_reward).count(), events);
    let (p_paid, se_paid) = proportion(out.events.iter().filter(|e| e.teammate_paid).count(), events);
    Ok(TeammateEstimate {
        n,
        events,
        p_any,
        se_any,
        p_paid,
        se_paid,
    })
}

/// Team reward received by agent 0 on landing at `s_c`, alongside the
/// per-agent environmental reward distribution of the same run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CueRewardStats {
    pub n: usize,
    pub events: usize,
    pub mean: f64,
    /// Sample variance (`n - 1` denominator).
    pub variance: f64,
    pub se_mean: f64,
    /// Mean per-agent, per-step environmental reward.
    pub agent_mean: f64,
    pub agent_variance: f64,
    pub se_agent_mean: f64,
    /// `agent_variance / n`, the variance of a mean of `n` iid rewards.
    pub iid_variance: f64,
}

pub fn team_reward_at_cue<R: Rng + ?Sized>(game: &SignalGame, n: usize, min_events: usize, rng: &mut R) -> Result<CueRewardStats> {
    let out = collect(game, n, min_events, rng)?;
    let k = out.events.len() as f64;
    let mean = out.events.iter().map(|e| e.team_reward).sum::<f64>() / k;
    let variance = if k > 1.0 {
        out.events.iter().map(|e| (e.team_reward - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let m = out.agent_steps as f64;
    let agent_mean = out.agent_sum / m;
    let agent_variance = (out.agent_sq / m - agent_mean * agent_mean).max(0.0) * m / (m - 1.0);
    Ok(CueRewardStats {
        n,
        events: out.events.len(),
        mean,
        variance,
        se_mean: (variance / k).sqrt(),
        agent_mean,
        agent_variance,
        se_agent_mean: (agent_variance / m).sqrt(),
        iid_variance: agent_variance / n as f64,
    })
}

/// [`team_reward_at_cue`] for each size in an ascending sweep.
pub fn team_reward_variance_curve<R: Rng + ?Sized>(
    game: &SignalGame,
    sizes: &[usize],
    samples_per_size: usize,
    rng: &mut R,
) -> Result<Vec<CueRewardStats>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("team sizes must be strictly ascending".into()));
    }
    sizes
        .iter()
        .map(|&n| team_reward_at_cue(game, n, samples_per_size, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_agent_has_no_teammates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = mc_teammate_in_reward_state(&SignalGame::two_states(), 1, 2000, &mut rng).unwrap();
        assert_eq!(e.p_any, 0.0);
        assert!(e.events >= 2000);
        let s = team_reward_at_cue(&SignalGame::two_states(), 1, 2000, &mut rng).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn estimates_are_reproducible() {
        let g = SignalGame::two_states();
        let a = mc_teammate_in_reward_state(&g, 3, 5000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = mc_teammate_in_reward_state(&g, 3, 5000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn four_states_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = mc_teammate_in_reward_state(&SignalGame::four_states(), 3, 4000, &mut rng).unwrap();
        // ζ = 3/4 for uniform four-state play
        assert!((e.p_any - (1.0 - 0.75f64.powi(2))).abs() < 4.0 * e.se_any);
    }

    #[test]
    fn ipd_rejected() {
        let g = SignalGame {
            kind: EnvKind::Ipd,
            reward_r: 1.0,
            slip_prob: 0.0,
        };
        assert!(mc_teammate_in_reward_state(&g, 2, 10, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
