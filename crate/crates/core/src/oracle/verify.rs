use std::f64::consts::PI;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::closed::{gaussian_reward_entropy, theorem1_probability};
use super::joint::{
    agrees_on_reachable, build_joint_model, enumerate_optimal_joint_policies, joint_policy_from_individual,
    policy_gain, value_iterate, Criterion,
};
use super::markov::occupancy_zeta;
use super::mc::{mc_teammate_in_reward_state, team_reward_at_cue, team_reward_variance_curve, SignalGame};
use crate::envs::{EnvKind, TwoStatesEnv, MOVE, STAY, S_C, S_R};
use crate::error::{Error, Result};
use crate::game::JointAction;
use crate::infotheory::{antitonic_fit, collect_return_samples, ProbeConfig};

/// One row of verifier output.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub n: usize,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn within(check: &str, n: usize, expected: f64, observed: f64, tolerance: f64) -> Self {
        CheckRow {
            check: check.into(),
            n,
            expected,
            observed,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
        }
    }

    fn flag(check: &str, n: usize, expected: f64, observed: f64, tolerance: f64, pass: bool) -> Self {
        CheckRow {
            check: check.into(),
            n,
            expected,
            observed,
            tolerance,
            pass,
        }
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<34} n={:<3} expected={:<12.6} observed={:<12.6} tol={:.3e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.n,
            self.expected,
            self.observed,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    Theorem1,
    Lemma1,
    InfoConvergence,
    JointOracle,
    All,
}

impl VerifyTarget {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "theorem1" => Some(VerifyTarget::Theorem1),
            "lemma1" => Some(VerifyTarget::Lemma1),
            "info-convergence" => Some(VerifyTarget::InfoConvergence),
            "joint-oracle" => Some(VerifyTarget::JointOracle),
            "all" => Some(VerifyTarget::All),
            _ => None,
        }
    }
}

/// Sampling budgets for the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyBudget {
    /// Conditioning events per team size for the teammate probability.
    pub theorem1_events: usize,
    /// Cue events per team size for reward mean/variance checks.
    pub cue_events: usize,
    /// Return windows per team size for the information sweep.
    pub info_samples: usize,
}

impl Default for VerifyBudget {
    fn default() -> Self {
        VerifyBudget {
            theorem1_events: 100_000,
            cue_events: 100_000,
            info_samples: 200_000,
        }
    }
}

pub fn run_verify(target: VerifyTarget, seed: u64, budget: &VerifyBudget) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let all = target == VerifyTarget::All;
    if all || target == VerifyTarget::Theorem1 {
        rows.extend(theorem1_checks(budget, &mut rng)?);
    }
    if all || target == VerifyTarget::Lemma1 {
        rows.extend(lemma1_checks(budget, &mut rng)?);
    }
    if all || target == VerifyTarget::InfoConvergence {
        rows.extend(info_convergence_checks(budget, &mut rng)?);
    }
    if all || target == VerifyTarget::JointOracle {
        rows.extend(joint_oracle_checks()?);
    }
    Ok(rows)
}

/// Closed forms, teammate-in-reward-state probability and the monotone
/// expected team reward at `s_c`.
pub fn theorem1_checks(budget: &VerifyBudget, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let mut rows = vec![
        CheckRow::within("theorem1_closed_form", 3, 0.75, theorem1_probability(0.5, 3)?, 1e-15),
        CheckRow::within("gaussian_entropy_closed_form", 0, 0.5, gaussian_reward_entropy(1.0 / (2.0 * PI))?, 1e-15),
    ];
    let game = SignalGame::two_states();
    let zeta = occupancy_zeta(EnvKind::TwoStates, 0.0)?;
    rows.push(CheckRow::within("stationary_zeta", 1, 0.5, zeta, 1e-12));
    for n in [2usize, 3, 5] {
        let est = mc_teammate_in_reward_state(&game, n, budget.theorem1_events, rng)?;
        let expected = theorem1_probability(zeta, n)?;
        rows.push(CheckRow::within("teammate_in_reward_state", n, expected, est.p_any, 3.0 * est.se_any));
    }
    rows.extend(cue_reward_monotone(&game, &[1, 2, 4, 8], budget.cue_events, rng)?);
    Ok(rows)
}

/// Mean team reward at `s_c` is 0 for n=1, positive beyond, and
/// non-decreasing within 3 standard errors.
pub fn cue_reward_monotone(game: &SignalGame, sizes: &[usize], events: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &n in sizes {
        let s = team_reward_at_cue(game, n, events, rng)?;
        if n == 1 {
            rows.push(CheckRow::within("cue_reward_single_agent_zero", n, 0.0, s.mean, 0.0));
        } else {
            rows.push(CheckRow::flag("cue_reward_positive", n, 0.0, s.mean, 0.0, s.mean > 0.0));
        }
        if let Some((pm, pse)) = prev {
            let tol = 3.0 * (pse * pse + s.se_mean * s.se_mean).sqrt();
            rows.push(CheckRow::flag("cue_reward_non_decreasing", n, pm, s.mean, tol, s.mean >= pm - tol));
        }
        prev = Some((s.mean, s.se_mean));
    }
    Ok(rows)
}

/// Variance of the team reward at `s_c` shrinks with team size and its
/// mean approaches the single-agent mean reward.
pub fn lemma1_checks(budget: &VerifyBudget, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let sizes = [2usize, 4, 8, 16, 32];
    let curve = team_reward_variance_curve(&SignalGame::two_states(), &sizes, budget.cue_events, rng)?;
    let single = team_reward_at_cue(&SignalGame::two_states(), 1, budget.cue_events, rng)?;
    let mut rows = vec![CheckRow::within("cue_variance_single_agent_zero", 1, 0.0, single.variance, 0.0)];
    for w in curve.windows(2) {
        rows.push(CheckRow::flag(
            "cue_variance_strictly_decreasing",
            w[1].n,
            w[0].variance,
            w[1].variance,
            0.0,
            w[1].variance < w[0].variance,
        ));
    }
    for s in &curve {
        let ratio = s.variance / s.iid_variance;
        rows.push(CheckRow::flag("cue_variance_vs_iid_oracle", s.n, 1.0, ratio, 5.0, ratio <= 5.0 && ratio >= 0.2));
    }
    let first = curve.first().expect("sizes non-empty");
    let last = curve.last().expect("sizes non-empty");
    let ratio = last.variance / first.variance;
    rows.push(CheckRow::flag("cue_variance_ratio_32_over_2", last.n, 0.1, ratio, 0.0, ratio < 0.1));
    let tol = 3.0 * (last.se_mean.powi(2) + last.se_agent_mean.powi(2)).sqrt();
    rows.push(CheckRow::within("cue_mean_matches_agent_mean", last.n, last.agent_mean, last.mean, tol));
    // closed-form side of the entropy link
    let h_first = gaussian_reward_entropy(first.variance)?;
    let h_last = gaussian_reward_entropy(last.variance)?;
    rows.push(CheckRow::flag("gaussian_entropy_follows_variance", last.n, h_first, h_last, 0.0, h_last < h_first));
    Ok(rows)
}

/// Expected info and team-reward entropy for n in {1, .., 32} under
/// uniform play: antitonic fit decreasing end to end, and value(32) below a
/// quarter of value(1).
pub fn info_convergence_checks(budget: &VerifyBudget, rng: &mut ChaCha8Rng) -> Result<Vec<CheckRow>> {
    let sizes = [1usize, 2, 4, 8, 16, 32];
    let n_max = *sizes.last().expect("non-empty");
    let mut info = Vec::new();
    let mut entropy = Vec::new();
    for &n in &sizes {
        let cfg = ProbeConfig::two_states(n, n_max, budget.info_samples)?;
        let report = collect_return_samples(&cfg, rng)?.report(&cfg)?;
        info.push(report.expected_info);
        entropy.push(report.tr_entropy);
    }
    let mut rows = Vec::new();
    for (name, series) in [("expected_info", &info), ("tr_entropy", &entropy)] {
        for (&n, &v) in sizes.iter().zip(series.iter()) {
            rows.push(CheckRow::flag(&format!("{name}_value"), n, 0.0, v, 0.0, v >= -1e-12));
        }
        let fit = antitonic_fit(series);
        rows.push(CheckRow::flag(
            &format!("{name}_antitonic_decrease"),
            n_max,
            fit[0],
            fit[fit.len() - 1],
            0.0,
            fit[fit.len() - 1] < fit[0],
        ));
        let ratio = series[series.len() - 1] / series[0];
        rows.push(CheckRow::flag(&format!("{name}_ratio_32_over_1"), n_max, 0.25, ratio, 0.0, ratio < 0.25));
    }
    Ok(rows)
}

/// Exact optimal gains, the three optimal policy classes at n=2,
/// and replay of optimal policies through the simulator.
pub fn joint_oracle_checks() -> Result<Vec<CheckRow>> {
    let r = 1.0;
    let mut rows = Vec::new();
    for n in [1usize, 2, 3, 4] {
        let m = build_joint_model(EnvKind::TwoStates, n, r)?;
        let sol = value_iterate(&m, Criterion::Average, 1e-12)?;
        let expected = if n == 1 { r / 2.0 } else { r * (n - 1) as f64 / n as f64 };
        let gain = sol.gain.expect("average criterion");
        rows.push(CheckRow::within("optimal_average_team_reward", n, expected, gain, 1e-9));
        if n <= 3 {
            rows.push(CheckRow::within("optimal_policy_replayed_in_env", n, gain, replay(&m, &sol.policy, 840)?, 1e-6));
        }
    }

    let m = build_joint_model(EnvKind::TwoStates, 2, r)?;
    let sol = value_iterate(&m, Criterion::Average, 1e-12)?;
    let g = sol.gain.expect("average criterion");
    let optimal = enumerate_optimal_joint_policies(&m, &sol, 1e-9)?;
    rows.push(CheckRow::flag("optimal_policy_count", 2, 1.0, optimal.len() as f64, 0.0, !optimal.is_empty()));

    let always_move = joint_policy_from_individual(&m, |_, _| MOVE)?;
    let always_stay = joint_policy_from_individual(&m, |_, _| STAY)?;
    let classes = [
        ("class_move_together", &always_move, m.encode(&[S_C, S_C], false)?),
        ("class_alternate_apart", &always_move, m.encode(&[S_C, S_R], true)?),
        ("class_stay_split", &always_stay, m.encode(&[S_C, S_R], true)?),
    ];
    for (name, policy, start) in classes {
        let gain = policy_gain(&m, policy, start)?;
        rows.push(CheckRow::within(name, 2, g, gain, 1e-9));
        let member = optimal.iter().any(|p| agrees_on_reachable(&m, policy, p, start));
        rows.push(CheckRow::flag(&format!("{name}_in_optimal_set"), 2, 1.0, member as u8 as f64, 0.0, member));
    }
    let both_cue = m.encode(&[S_C, S_C], true)?;
    rows.push(CheckRow::within("both_stay_on_cue_gain", 2, 0.0, policy_gain(&m, &always_stay, both_cue)?, 1e-12));
    let in_set = optimal.iter().any(|p| agrees_on_reachable(&m, &always_stay, p, both_cue));
    rows.push(CheckRow::flag("both_stay_on_cue_not_optimal", 2, 0.0, in_set as u8 as f64, 0.0, !in_set));
    Ok(rows)
}

/// Mean per-step team reward of a joint policy run through the simulator
/// from state 0, skipping a transient. `steps` should be a multiple of the
/// cycle length; 840 covers every cycle up to 8.
fn replay(model: &super::joint::JointModel, policy: &[usize], steps: usize) -> Result<f64> {
    let n = model.agents();
    let (pos, c) = model.decode(0);
    let mut env = TwoStatesEnv::new(n, model.reward_r())?;
    env.set_state(pos, c)?;
    let warmup = model.state_count();
    let mut total = 0.0;
    for t in 0..warmup + steps {
        let s = model.encode(env.positions(), env.signal())?;
        let r = env.apply(&JointAction::new(model.decode_action(policy[s])))?;
        if t >= warmup {
            total += r.iter().sum::<f64>() / n as f64;
        }
    }
    if steps == 0 {
        return Err(Error::Domain("replay needs at least one step".into()));
    }
    Ok(total / steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_oracle_rows_pass() {
        let rows = joint_oracle_checks().unwrap();
        for r in &rows {
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn target_parsing() {
        assert_eq!(VerifyTarget::parse("lemma1"), Some(VerifyTarget::Lemma1));
        assert_eq!(VerifyTarget::parse("nope"), None);
    }
}
