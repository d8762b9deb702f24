//! Empirical information diagnostics over binned return distributions:
//! per-pair KL info gain, its visitation-weighted mean and variance,
//! per-step team-reward entropy, sparsity classification, and the largest
//! team size that still carries information.
//!
//! All logarithms are natural.

mod binning;
mod estimators;
mod probe;
mod table;

pub use binning::ReturnBinning;
pub use estimators::{
    antitonic_fit, bootstrap_expected_info_se, classify_sparsity, expected_info, info_gain,
    sample_sd, team_reward_entropy, variance_of_info, InfoReport, PairInfo, Sparsity, SparsityThresholds,
    SparsityVerdict,
};
pub use probe::{collect_return_samples, max_informative_team_size, ProbeConfig, ProbeEnv, ProbeSamples};
pub use table::{l1_distance, Distribution, ReturnDistributionTable, ReturnSample};

