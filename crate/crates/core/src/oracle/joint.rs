use crate::envs::{settle_signal, EnvKind, FourStatesEnv, TwoStatesEnv, S_C, S_R};
use crate::error::{Error, Result};
use crate::game::TeamStructure;

/// Largest team the exact two-state model accepts (2^8·2 states).
pub const TWO_STATES_CAP: usize = 8;
/// Largest team the exact four-state model accepts (4^4·2 states).
pub const FOUR_STATES_CAP: usize = 4;

/// Exact joint model of a signal game for one team of `n` agents.
///
/// State index = `config·2 + c`, with `config = Σ_i pos_i·P^i` for `P`
/// physical states. Joint actions are coded the same way in base `A`.
#[derive(Debug, Clone)]
pub struct JointModel {
    kind: EnvKind,
    n: usize,
    phys: usize,
    reward_r: f64,
    slip: f64,
    teams: TeamStructure,
    configs: usize,
    joint_actions: usize,
    /// Four-state landing depends only on the targets; cached per action.
    action_landing: Option<Vec<Vec<(usize, f64)>>>,
}

/// One possible result of a joint action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    /// Mean team reward over the population.
    pub reward: f64,
}

pub fn build_joint_model(kind: EnvKind, n: usize, reward_r: f64) -> Result<JointModel> {
    build_joint_model_with_slip(kind, n, reward_r, 0.1)
}

pub fn build_joint_model_with_slip(kind: EnvKind, n: usize, reward_r: f64, slip: f64) -> Result<JointModel> {
    let cap = match kind {
        EnvKind::TwoStates => TWO_STATES_CAP,
        EnvKind::FourStates => FOUR_STATES_CAP,
        EnvKind::Ipd => return Err(Error::Config("no joint model for the prisoner's dilemma".into())),
    };
    if n == 0 {
        return Err(Error::Config("joint model needs at least one agent".into()));
    }
    if n > cap {
        return Err(Error::Capacity(format!("{} joint model capped at n={cap}, asked for {n}", kind.name())));
    }
    if !(reward_r > 0.0) {
        return Err(Error::Config(format!("reward r must be positive, got {reward_r}")));
    }
    let phys = kind.physical_states().expect("signal game");
    let configs = phys.pow(n as u32);
    let mut model = JointModel {
        kind,
        n,
        phys,
        reward_r,
        slip,
        teams: TeamStructure::single(n)?,
        configs,
        joint_actions: configs,
        action_landing: None,
    };
    if kind == EnvKind::FourStates {
        let cache = (0..model.joint_actions)
            .map(|a| {
                let targets = model.decode_config(a);
                model.product(|i, l| FourStatesEnv::landing_distribution(slip, targets[i])[l])
            })
            .collect();
        model.action_landing = Some(cache);
    }
    Ok(model)
}

impl JointModel {
    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn reward_r(&self) -> f64 {
        self.reward_r
    }

    pub fn slip_prob(&self) -> f64 {
        self.slip
    }

    pub fn teams(&self) -> &TeamStructure {
        &self.teams
    }

    pub fn state_count(&self) -> usize {
        self.configs * 2
    }

    pub fn action_count(&self) -> usize {
        self.joint_actions
    }

    pub fn is_deterministic(&self) -> bool {
        self.kind == EnvKind::TwoStates
    }

    pub fn encode(&self, positions: &[u8], signal: bool) -> Result<usize> {
        if positions.len() != self.n {
            return Err(Error::Shape {
                what: "positions",
                expected: self.n,
                got: positions.len(),
            });
        }
        let mut config = 0;
        for &p in positions.iter().rev() {
            if p as usize >= self.phys {
                return Err(Error::Index {
                    what: "physical state",
                    index: p as usize,
                    limit: self.phys,
                });
            }
            config = config * self.phys + p as usize;
        }
        Ok(config * 2 + signal as usize)
    }

    pub fn decode(&self, state: usize) -> (Vec<u8>, bool) {
        (self.decode_config(state / 2), state % 2 == 1)
    }

    pub fn decode_action(&self, action: usize) -> Vec<u8> {
        self.decode_config(action)
    }

    pub fn encode_action(&self, per_agent: &[u8]) -> Result<usize> {
        Ok(self.encode(per_agent, false)? / 2)
    }

    fn decode_config(&self, mut config: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            out.push((config % self.phys) as u8);
            config /= self.phys;
        }
        out
    }

    /// Distribution over landing configs from independent per-agent kernels.
    fn product<F: Fn(usize, usize) -> f64>(&self, kernel: F) -> Vec<(usize, f64)> {
        let mut dist = vec![(0usize, 1.0f64)];
        let mut place = 1;
        for i in 0..self.n {
            let mut next = Vec::with_capacity(dist.len() * self.phys);
            for &(c, p) in &dist {
                for l in 0..self.phys {
                    let q = kernel(i, l);
                    if q > 0.0 {
                        next.push((c + l * place, p * q));
                    }
                }
            }
            dist = next;
            place *= self.phys;
        }
        dist
    }

    /// Landing configs and probabilities for a joint action.
    pub fn landing(&self, config: usize, action: usize) -> Vec<(usize, f64)> {
        match &self.action_landing {
            Some(cache) => cache[action].clone(),
            None => {
                let pos = self.decode_config(config);
                let act = self.decode_config(action);
                let mut next = 0;
                for i in (0..self.n).rev() {
                    next = next * self.phys + TwoStatesEnv::next_position(pos[i], act[i]) as usize;
                }
                vec![(next, 1.0)]
            }
        }
    }

    /// Reward and successor state once agents have landed on `config`.
    pub fn settle(&self, config: usize, signal_before: bool) -> (f64, usize) {
        let pos = self.decode_config(config);
        let on_r = pos.iter().filter(|&&p| p == S_R).count();
        let on_c = pos.iter().filter(|&&p| p == S_C).count();
        let s = settle_signal(signal_before, on_r, on_c);
        let total = if s.paid { on_r as f64 * self.reward_r } else { 0.0 };
        (total / self.n as f64, config * 2 + s.next_signal as usize)
    }

    pub fn outcomes(&self, state: usize, action: usize) -> Vec<Outcome> {
        let signal = state % 2 == 1;
        self.landing(state / 2, action)
            .into_iter()
            .map(|(cfg, prob)| {
                let (reward, next) = self.settle(cfg, signal);
                Outcome { next, prob, reward }
            })
            .collect()
    }

    /// One-step lookahead `Σ p·(reward + weight·v(next))` for every
    /// (state, action), in row-major order.
    fn lookahead(&self, v: &[f64], weight: f64) -> Vec<f64> {
        let s_count = self.state_count();
        let a_count = self.action_count();
        // W_c(config) = reward + weight·v(next) after landing on config
        let mut w = [vec![0.0; self.configs], vec![0.0; self.configs]];
        for (c, wc) in w.iter_mut().enumerate() {
            for (cfg, slot) in wc.iter_mut().enumerate() {
                let (r, next) = self.settle(cfg, c == 1);
                *slot = r + weight * v[next];
            }
        }
        let mut q = vec![0.0; s_count * a_count];
        match &self.action_landing {
            Some(cache) => {
                // depends on (c, action) only
                let mut by_signal = [vec![0.0; a_count], vec![0.0; a_count]];
                for c in 0..2 {
                    for a in 0..a_count {
                        by_signal[c][a] = cache[a].iter().map(|&(l, p)| p * w[c][l]).sum();
                    }
                }
                for s in 0..s_count {
                    q[s * a_count..(s + 1) * a_count].copy_from_slice(&by_signal[s % 2]);
                }
            }
            None => {
                for s in 0..s_count {
                    for a in 0..a_count {
                        let (l, _) = self.landing(s / 2, a)[0];
                        q[s * a_count + a] = w[s % 2][l];
                    }
                }
            }
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Discounted { gamma: f64 },
    /// Long-run average reward per step.
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    /// Discounted values, or relative values (bias) under the average criterion.
    pub values: Vec<f64>,
    /// Optimal long-run average reward, average criterion only.
    pub gain: Option<f64>,
    /// Greedy joint action per state, lowest index among ties.
    pub policy: Vec<usize>,
    pub iterations: usize,
    pub residual: f64,
}

const MAX_SWEEPS: usize = 1_000_000;
/// Self-loop weight of the aperiodicity transform.
const TAU: f64 = 0.5;

fn greedy(q: &[f64], a_count: usize) -> (Vec<f64>, Vec<usize>) {
    q.chunks(a_count)
        .map(|row| {
            let mut best = 0;
            for a in 1..row.len() {
                if row[a] > row[best] {
                    best = a;
                }
            }
            (row[best], best)
        })
        .unzip()
}

pub fn value_iterate(model: &JointModel, criterion: Criterion, tol: f64) -> Result<JointSolution> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let a_count = model.action_count();
    let mut v = vec![0.0; model.state_count()];
    match criterion {
        Criterion::Discounted { gamma } => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::Config(format!("discounted mode needs gamma in (0, 1), got {gamma}")));
            }
            let stop = tol * (1.0 - gamma) / (2.0 * gamma);
            let mut residual = f64::INFINITY;
            for it in 1..=MAX_SWEEPS {
                let (next, policy) = greedy(&model.lookahead(&v, gamma), a_count);
                residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = next;
                if residual < stop {
                    return Ok(JointSolution {
                        values: v,
                        gain: None,
                        policy,
                        iterations: it,
                        residual,
                    });
                }
            }
            Err(Error::NonConvergence {
                iterations: MAX_SWEEPS,
                residual,
            })
        }
        Criterion::Average => {
            // relative value iteration on P' = τI + (1-τ)P, whose gain is (1-τ)·g
            let mut span = f64::INFINITY;
            for it in 1..=MAX_SWEEPS {
                let q = model.lookahead(&v, 1.0);
                let (best, policy) = greedy(&q, a_count);
                let next: Vec<f64> = best
                    .iter()
                    .zip(&v)
                    .map(|(b, h)| (1.0 - TAU) * b + TAU * h)
                    .collect();
                let (lo, hi) = next
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a - b)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
                span = hi - lo;
                let anchor = next[0];
                v = next.into_iter().map(|x| x - anchor).collect();
                if span < tol * (1.0 - TAU) {
                    return Ok(JointSolution {
                        values: v,
                        gain: Some(0.5 * (lo + hi) / (1.0 - TAU)),
                        policy,
                        iterations: it,
                        residual: span,
                    });
                }
            }
            Err(Error::NonConvergence {
                iterations: MAX_SWEEPS,
                residual: span,
            })
        }
    }
}

/// Long-run average reward of a stationary deterministic joint policy
/// started in `start`.
pub fn policy_gain(model: &JointModel, policy: &[usize], start: usize) -> Result<f64> {
    if policy.len() != model.state_count() {
        return Err(Error::Shape {
            what: "joint policy",
            expected: model.state_count(),
            got: policy.len(),
        });
    }
    if let Some(&a) = policy.iter().find(|&&a| a >= model.action_count()) {
        return Err(Error::Index {
            what: "joint action",
            index: a,
            limit: model.action_count(),
        });
    }
    if model.is_deterministic() {
        let mut seen = vec![usize::MAX; model.state_count()];
        let mut rewards = Vec::new();
        let mut s = start;
        loop {
            if seen[s] != usize::MAX {
                let cycle = &rewards[seen[s]..];
                return Ok(cycle.iter().sum::<f64>() / cycle.len() as f64);
            }
            seen[s] = rewards.len();
            let o = model.outcomes(s, policy[s])[0];
            rewards.push(o.reward);
            s = o.next;
        }
    }
    // lazy chain: iterate the aperiodic distribution until it settles
    let rows: Vec<Vec<Outcome>> = (0..model.state_count()).map(|s| model.outcomes(s, policy[s])).collect();
    let mut d = vec![0.0; model.state_count()];
    d[start] = 1.0;
    for _ in 0..MAX_SWEEPS {
        let mut next: Vec<f64> = d.iter().map(|x| TAU * x).collect();
        for (s, row) in rows.iter().enumerate() {
            if d[s] == 0.0 {
                continue;
            }
            for o in row {
                next[o.next] += (1.0 - TAU) * d[s] * o.prob;
            }
        }
        let change: f64 = next.iter().zip(&d).map(|(a, b)| (a - b).abs()).sum();
        d = next;
        if change < 1e-14 {
            return Ok(rows
                .iter()
                .zip(&d)
                .map(|(row, w)| w * row.iter().map(|o| o.prob * o.reward).sum::<f64>())
                .sum());
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_SWEEPS,
        residual: f64::NAN,
    })
}

/// Joint policy from one individual rule applied by every agent to its own
/// position: `rule(agent, position) -> action`.
pub fn joint_policy_from_individual<F: Fn(usize, u8) -> u8>(model: &JointModel, rule: F) -> Result<Vec<usize>> {
    (0..model.state_count())
        .map(|s| {
            let (pos, _) = model.decode(s);
            let acts: Vec<u8> = pos.iter().enumerate().map(|(i, &p)| rule(i, p)).collect();
            model.encode_action(&acts)
        })
        .collect()
}

/// States reached from `start` under a deterministic-model policy.
pub fn reachable_states(model: &JointModel, policy: &[usize], start: usize) -> Vec<usize> {
    let mut seen = vec![false; model.state_count()];
    let mut stack = vec![start];
    let mut out = Vec::new();
    while let Some(s) = stack.pop() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        out.push(s);
        for o in model.outcomes(s, policy[s]) {
            if o.prob > 0.0 {
                stack.push(o.next);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Every deterministic stationary joint policy whose gain matches the
/// optimum from every start state. Two-state game with n ≤ 2 only.
pub fn enumerate_optimal_joint_policies(model: &JointModel, solution: &JointSolution, tol: f64) -> Result<Vec<Vec<usize>>> {
    if model.kind() != EnvKind::TwoStates || model.agents() > 2 {
        return Err(Error::Capacity("policy enumeration supports the two-state game with n <= 2".into()));
    }
    let g = solution
        .gain
        .ok_or_else(|| Error::Domain("enumeration needs an average-criterion solution".into()))?;
    let s_count = model.state_count();
    let a_count = model.action_count();
    let total = a_count.pow(s_count as u32);
    let mut out = Vec::new();
    let mut policy = vec![0usize; s_count];
    for code in 0..total {
        let mut c = code;
        for slot in policy.iter_mut() {
            *slot = c % a_count;
            c /= a_count;
        }
        let mut optimal = true;
        for s in 0..s_count {
            if policy_gain(model, &policy, s)? < g - tol {
                optimal = false;
                break;
            }
        }
        if optimal {
            out.push(policy.clone());
        }
    }
    Ok(out)
}

/// Whether `candidate` chooses like `reference` on every state that
/// `reference` visits from `start`.
pub fn agrees_on_reachable(model: &JointModel, reference: &[usize], candidate: &[usize], start: usize) -> bool {
    reachable_states(model, reference, start)
        .into_iter()
        .all(|s| reference[s] == candidate[s])
}
