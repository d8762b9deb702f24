use std::collections::BTreeMap;

use rand::Rng;

use super::binning::ReturnBinning;
use super::table::{ReturnDistributionTable, ReturnSample};
use crate::error::{Error, Result};

/// `KL(p(Z|s,a) ‖ p(Z|s))` in nats, summed over the support of the
/// conditional.
pub fn info_gain(table: &ReturnDistributionTable, s: usize, a: usize) -> Result<f64> {
    let cond = table.conditional(s, a)?;
    let mix = table.mixture(s)?;
    let mut kl = 0.0;
    for (b, p) in cond {
        let m = mix.get(&b).copied().unwrap_or(0.0);
        if m <= 0.0 {
            // only possible when π(a|s) = 0
            return Err(Error::Estimation(format!(
                "conditional for ({s}, {a}) is not covered by the policy mixture"
            )));
        }
        kl += p * (p / m).ln();
    }
    Ok(kl)
}

/// Info gain for every pair with samples, with its visitation weight.
fn weighted_gains(table: &ReturnDistributionTable) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for s in 0..table.states() {
        for a in 0..table.actions() {
            let w = table.visitation(s, a);
            if w > 0.0 {
                out.push((w, info_gain(table, s, a)?));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Estimation("return table is empty".into()));
    }
    Ok(out)
}

/// `Σ d(s,a)·I(s,a)`.
pub fn expected_info(table: &ReturnDistributionTable) -> Result<f64> {
    Ok(weighted_gains(table)?.iter().map(|(w, i)| w * i).sum())
}

/// d-weighted variance of the per-pair info gains.
pub fn variance_of_info(table: &ReturnDistributionTable) -> Result<f64> {
    let g = weighted_gains(table)?;
    let mean: f64 = g.iter().map(|(w, i)| w * i).sum();
    let second: f64 = g.iter().map(|(w, i)| w * i * i).sum();
    Ok((second - mean * mean).max(0.0))
}

/// Shannon entropy (nats) of the binned empirical distribution.
pub fn team_reward_entropy(samples: &[f64], binning: &ReturnBinning, min_samples: usize) -> Result<f64> {
    if samples.len() < min_samples.max(1) {
        return Err(Error::Estimation(format!(
            "need at least {} team-reward samples, got {}",
            min_samples.max(1),
            samples.len()
        )));
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &x in samples {
        *counts.entry(binning.bin_of(x)).or_default() += 1;
    }
    let n = samples.len() as f64;
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityThresholds {
    pub epsilon: f64,
    pub mu: f64,
}

impl SparsityThresholds {
    pub fn new(epsilon: f64, mu: f64) -> Result<Self> {
        if !(epsilon > 0.0 && mu > 0.0) {
            return Err(Error::Config(format!(
                "sparsity thresholds must be positive, got epsilon={epsilon} mu={mu}"
            )));
        }
        Ok(SparsityThresholds { epsilon, mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Sparse,
    NotSparse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityVerdict {
    pub class: Sparsity,
    /// `expected_info - ε`
    pub info_margin: f64,
    /// `variance_of_info - μ`
    pub variance_margin: f64,
}

/// Sparse when the expected info is at most ε or its variance at most μ.
pub fn classify_sparsity(expected: f64, variance: f64, th: &SparsityThresholds) -> SparsityVerdict {
    let class = if expected <= th.epsilon || variance <= th.mu {
        Sparsity::Sparse
    } else {
        Sparsity::NotSparse
    };
    SparsityVerdict {
        class,
        info_margin: expected - th.epsilon,
        variance_margin: variance - th.mu,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairInfo {
    pub state: usize,
    pub action: usize,
    pub weight: f64,
    pub info: f64,
}

/// Information diagnostics evaluated at one behaviour policy.
///
/// The sup over initial policies is evaluated at the uniform policy only,
/// and the entropy is the stationary unconditional one, not conditioned on
/// the trajectory prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoReport {
    pub pairs: Vec<PairInfo>,
    pub expected_info: f64,
    pub variance_info: f64,
    pub tr_entropy: f64,
    pub return_samples: u64,
    pub reward_samples: usize,
    pub insufficient_pairs: Vec<(usize, usize)>,
}

impl InfoReport {
    pub fn build(
        table: &ReturnDistributionTable,
        rewards: &[f64],
        entropy_binning: &ReturnBinning,
        min_reward_samples: usize,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        for s in 0..table.states() {
            for a in 0..table.actions() {
                let weight = table.visitation(s, a);
                if weight > 0.0 {
                    pairs.push(PairInfo {
                        state: s,
                        action: a,
                        weight,
                        info: info_gain(table, s, a)?,
                    });
                }
            }
        }
        Ok(InfoReport {
            pairs,
            expected_info: expected_info(table)?,
            variance_info: variance_of_info(table)?,
            tr_entropy: team_reward_entropy(rewards, entropy_binning, min_reward_samples)?,
            return_samples: table.total(),
            reward_samples: rewards.len(),
            insufficient_pairs: table.insufficient_pairs(),
        })
    }

    pub fn classify(&self, th: &SparsityThresholds) -> SparsityVerdict {
        classify_sparsity(self.expected_info, self.variance_info, th)
    }
}

/// Bootstrap standard error of `expected_info` by resampling return samples
/// with replacement.
pub fn bootstrap_expected_info_se<R: Rng + ?Sized>(
    template: &ReturnDistributionTable,
    samples: &[ReturnSample],
    resamples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples.is_empty() || resamples < 2 {
        return Err(Error::Estimation("bootstrap needs samples and at least 2 resamples".into()));
    }
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut t = ReturnDistributionTable::new(
            template.states(),
            template.actions(),
            *template.binning(),
            template.policy().clone(),
            0,
        )?;
        for _ in 0..samples.len() {
            t.record(samples[rng.gen_range(0..samples.len())])?;
        }
        values.push(expected_info(&t)?);
    }
    Ok(sample_sd(&values))
}

/// Sample standard deviation, `n - 1` denominator.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub fn antitonic_fit(values: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().expect("two blocks") = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat(m).take(w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::uniform_random_policy;

    fn bandit_table() -> ReturnDistributionTable {
        let b = ReturnBinning::new(0.5).unwrap();
        let mut samples = Vec::new();
        for _ in 0..50 {
            samples.push(ReturnSample { state: 0, action: 0, z: 0.0 });
            samples.push(ReturnSample { state: 0, action: 1, z: 1.0 });
        }
        ReturnDistributionTable::from_samples(1, 2, b, uniform_random_policy(2).unwrap(), 1, &samples).unwrap()
    }

    #[test]
    fn bandit_gains_are_ln2() {
        let t = bandit_table();
        let ln2 = 2f64.ln();
        assert!((info_gain(&t, 0, 0).unwrap() - ln2).abs() < 1e-15);
        assert!((info_gain(&t, 0, 1).unwrap() - ln2).abs() < 1e-15);
        assert!((expected_info(&t).unwrap() - ln2).abs() < 1e-15);
        assert!(variance_of_info(&t).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identical_conditionals_carry_no_info() {
        let b = ReturnBinning::new(0.5).unwrap();
        let samples: Vec<_> = (0..40)
            .map(|k| ReturnSample { state: 0, action: k % 2, z: 5.0 })
            .collect();
        let t = ReturnDistributionTable::from_samples(1, 2, b, uniform_random_policy(2).unwrap(), 1, &samples).unwrap();
        assert_eq!(info_gain(&t, 0, 0).unwrap(), 0.0);
        assert_eq!(expected_info(&t).unwrap(), 0.0);
        assert_eq!(variance_of_info(&t).unwrap(), 0.0);
        // point mass at the bin holding 5
        let c = t.conditional(0, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&b.bin_of(5.0)], 1.0);
    }

    #[test]
    fn two_point_variance() {
        // state 0: bandit (info ln2 each); state 1: constant (info 0); equal weights
        let b = ReturnBinning::new(0.5).unwrap();
        let mut samples = Vec::new();
        for _ in 0..50 {
            samples.push(ReturnSample { state: 0, action: 0, z: 0.0 });
            samples.push(ReturnSample { state: 0, action: 1, z: 1.0 });
            samples.push(ReturnSample { state: 1, action: 0, z: 3.0 });
            samples.push(ReturnSample { state: 1, action: 1, z: 3.0 });
        }
        let t = ReturnDistributionTable::from_samples(2, 2, b, uniform_random_policy(2).unwrap(), 1, &samples).unwrap();
        let ln2 = 2f64.ln();
        assert!((expected_info(&t).unwrap() - ln2 / 2.0).abs() < 1e-15);
        assert!((variance_of_info(&t).unwrap() - ln2 * ln2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn missing_pair_is_an_estimation_error() {
        let b = ReturnBinning::new(0.5).unwrap();
        let samples = vec![ReturnSample { state: 0, action: 0, z: 1.0 }];
        let t = ReturnDistributionTable::from_samples(1, 2, b, uniform_random_policy(2).unwrap(), 1, &samples).unwrap();
        assert!(matches!(info_gain(&t, 0, 1), Err(Error::Estimation(_))));
        assert_eq!(t.insufficient_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn entropy_examples() {
        let b = ReturnBinning::new(0.5).unwrap();
        assert_eq!(team_reward_entropy(&[1.0; 10], &b, 1).unwrap(), 0.0);
        let h = team_reward_entropy(&[0.0, 1.0, 0.0, 1.0], &b, 1).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        assert!(team_reward_entropy(&[1.0], &b, 10).is_err());
    }

    #[test]
    fn sparsity_classification() {
        let th = SparsityThresholds::new(0.01, 0.01).unwrap();
        assert_eq!(classify_sparsity(0.0, 1.0, &th).class, Sparsity::Sparse);
        let ln2 = 2f64.ln();
        let v = classify_sparsity(ln2, ln2 * ln2 / 4.0, &th);
        assert_eq!(v.class, Sparsity::NotSparse);
        assert!((v.info_margin - (ln2 - 0.01)).abs() < 1e-15);
        assert_eq!(classify_sparsity(5.0, 0.0, &th).class, Sparsity::Sparse);
        assert!(SparsityThresholds::new(0.0, 0.1).is_err());
        assert!(SparsityThresholds::new(0.1, 0.0).is_err());
    }

    #[test]
    fn antitonic_fit_pools_violators() {
        assert_eq!(antitonic_fit(&[3.0, 2.0, 1.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(antitonic_fit(&[1.0, 3.0]), vec![2.0, 2.0]);
        assert_eq!(antitonic_fit(&[4.0, 1.0, 2.0, 0.0]), vec![4.0, 1.5, 1.5, 0.0]);
        assert!(antitonic_fit(&[]).is_empty());
    }

    #[test]
    fn report_collects_pairs() {
        let t = bandit_table();
        let b = ReturnBinning::new(0.5).unwrap();
        let r = InfoReport::build(&t, &[0.0, 1.0], &b, 1).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert_eq!(r.return_samples, 100);
        assert!(r.insufficient_pairs.is_empty());
    }
}
