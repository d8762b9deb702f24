//! Exact and closed-form references: joint-model dynamic programming for
//! the signal games, stationary chains, Monte Carlo estimators under
//! uniform play, and the verifier checks built on them.

mod closed;
mod joint;
mod markov;
mod mc;
mod verify;

pub use closed::{gaussian_reward_entropy, theorem1_probability};
pub use joint::{
    agrees_on_reachable, build_joint_model, build_joint_model_with_slip, enumerate_optimal_joint_policies,
    joint_policy_from_individual, policy_gain, reachable_states, value_iterate, Criterion, JointModel,
    JointSolution, Outcome, FOUR_STATES_CAP, TWO_STATES_CAP,
};
pub use markov::{occupancy_zeta, stationary_distribution, uniform_position_chain};
pub use mc::{
    mc_teammate_in_reward_state, team_reward_at_cue, team_reward_variance_curve, CueRewardStats, SignalGame,
    TeammateEstimate,
};
pub use verify::{
    cue_reward_monotone, info_convergence_checks, joint_oracle_checks, lemma1_checks, run_verify,
    theorem1_checks, CheckRow, VerifyBudget, VerifyTarget,
};
