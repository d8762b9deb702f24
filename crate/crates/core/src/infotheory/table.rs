use std::collections::BTreeMap;

use super::binning::ReturnBinning;
use crate::error::{Error, Result};
use crate::learners::StationaryPolicy;

/// One observed return: the designated agent's observation and action at
/// the window start, and the discounted team-reward sum that followed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnSample {
    pub state: usize,
    pub action: usize,
    pub z: f64,
}

pub type Distribution = BTreeMap<i64, f64>;

/// Binned return counts per (state, action), plus per-state marginals
/// accumulated independently of the conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDistributionTable {
    states: usize,
    actions: usize,
    binning: ReturnBinning,
    policy: StationaryPolicy,
    pair_counts: Vec<BTreeMap<i64, u64>>,
    pair_totals: Vec<u64>,
    marginal_counts: Vec<BTreeMap<i64, u64>>,
    min_per_pair: u64,
    observed: Option<(f64, f64)>,
}

impl ReturnDistributionTable {
    pub fn new(
        states: usize,
        actions: usize,
        binning: ReturnBinning,
        policy: StationaryPolicy,
        min_per_pair: u64,
    ) -> Result<Self> {
        if policy.action_count() != actions {
            return Err(Error::Shape {
                what: "policy actions",
                expected: actions,
                got: policy.action_count(),
            });
        }
        Ok(ReturnDistributionTable {
            states,
            actions,
            binning,
            policy,
            pair_counts: vec![BTreeMap::new(); states * actions],
            pair_totals: vec![0; states * actions],
            marginal_counts: vec![BTreeMap::new(); states],
            min_per_pair,
            observed: None,
        })
    }

    pub fn from_samples(
        states: usize,
        actions: usize,
        binning: ReturnBinning,
        policy: StationaryPolicy,
        min_per_pair: u64,
        samples: &[ReturnSample],
    ) -> Result<Self> {
        let mut t = Self::new(states, actions, binning, policy, min_per_pair)?;
        for s in samples {
            t.record(*s)?;
        }
        Ok(t)
    }

    pub fn record(&mut self, sample: ReturnSample) -> Result<()> {
        let ReturnSample { state, action, z } = sample;
        if state >= self.states {
            return Err(Error::Index {
                what: "state",
                index: state,
                limit: self.states,
            });
        }
        if action >= self.actions {
            return Err(Error::Index {
                what: "action",
                index: action,
                limit: self.actions,
            });
        }
        let bin = self.binning.bin_of(z);
        let k = state * self.actions + action;
        *self.pair_counts[k].entry(bin).or_default() += 1;
        self.pair_totals[k] += 1;
        *self.marginal_counts[state].entry(bin).or_default() += 1;
        self.observed = Some(match self.observed {
            None => (z, z),
            Some((lo, hi)) => (lo.min(z), hi.max(z)),
        });
        Ok(())
    }

    /// Folds another table with the same layout into this one.
    pub fn merge(&mut self, other: &ReturnDistributionTable) -> Result<()> {
        if other.states != self.states || other.actions != self.actions || other.binning != self.binning {
            return Err(Error::Domain("merging tables with different layouts".into()));
        }
        for (mine, theirs) in self.pair_counts.iter_mut().zip(&other.pair_counts) {
            for (&b, &c) in theirs {
                *mine.entry(b).or_default() += c;
            }
        }
        for (mine, theirs) in self.marginal_counts.iter_mut().zip(&other.marginal_counts) {
            for (&b, &c) in theirs {
                *mine.entry(b).or_default() += c;
            }
        }
        for (m, t) in self.pair_totals.iter_mut().zip(&other.pair_totals) {
            *m += t;
        }
        self.observed = match (self.observed, other.observed) {
            (None, o) | (o, None) => o,
            (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
        };
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn binning(&self) -> &ReturnBinning {
        &self.binning
    }

    pub fn policy(&self) -> &StationaryPolicy {
        &self.policy
    }

    /// Smallest and largest return seen so far.
    pub fn observed_range(&self) -> Option<(f64, f64)> {
        self.observed
    }

    pub fn bin_count(&self) -> usize {
        self.observed
            .map(|(lo, hi)| self.binning.bin_count(lo, hi))
            .unwrap_or(0)
    }

    pub fn pair_count(&self, s: usize, a: usize) -> u64 {
        self.pair_totals[s * self.actions + a]
    }

    pub fn state_count(&self, s: usize) -> u64 {
        (0..self.actions).map(|a| self.pair_count(s, a)).sum()
    }

    pub fn total(&self) -> u64 {
        self.pair_totals.iter().sum()
    }

    /// Pairs with fewer than the configured minimum of samples.
    pub fn insufficient_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in 0..self.states {
            for a in 0..self.actions {
                if self.pair_count(s, a) < self.min_per_pair {
                    out.push((s, a));
                }
            }
        }
        out
    }

    /// Empirical `d(s, a)`.
    pub fn visitation(&self, s: usize, a: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.pair_count(s, a) as f64 / total as f64
        }
    }

    /// Empirical `π̂(a|s)` from the sample counts.
    pub fn empirical_policy(&self, s: usize, a: usize) -> f64 {
        let n = self.state_count(s);
        if n == 0 {
            0.0
        } else {
            self.pair_count(s, a) as f64 / n as f64
        }
    }

    /// `p(Z | s, a)`; only bins with positive mass are present.
    pub fn conditional(&self, s: usize, a: usize) -> Result<Distribution> {
        let n = self.pair_count(s, a);
        if n == 0 {
            return Err(Error::Estimation(format!("no return samples for state {s}, action {a}")));
        }
        Ok(self.pair_counts[s * self.actions + a]
            .iter()
            .map(|(&b, &c)| (b, c as f64 / n as f64))
            .collect())
    }

    /// `Σ_a w(a)·p(Z | s, a)` for arbitrary action weights.
    pub fn mixture_with(&self, s: usize, weights: &[f64]) -> Result<Distribution> {
        let mut out = Distribution::new();
        for (a, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (b, p) in self.conditional(s, a)? {
                *out.entry(b).or_default() += w * p;
            }
        }
        Ok(out)
    }

    /// `p(Z | s)` under the declared rollout policy.
    pub fn mixture(&self, s: usize) -> Result<Distribution> {
        let weights: Vec<f64> = (0..self.actions).map(|a| self.policy.prob(s, a)).collect();
        self.mixture_with(s, &weights)
    }

    /// Marginal `p(Z | s)` from the counts accumulated per state.
    pub fn empirical_marginal(&self, s: usize) -> Result<Distribution> {
        let n = self.state_count(s);
        if n == 0 {
            return Err(Error::Estimation(format!("no return samples for state {s}")));
        }
        Ok(self.marginal_counts[s]
            .iter()
            .map(|(&b, &c)| (b, c as f64 / n as f64))
            .collect())
    }
}

/// L1 distance between two sparse distributions.
pub fn l1_distance(p: &Distribution, q: &Distribution) -> f64 {
    let mut d = 0.0;
    for (b, &pv) in p {
        d += (pv - q.get(b).copied().unwrap_or(0.0)).abs();
    }
    for (b, &qv) in q {
        if !p.contains_key(b) {
            d += qv.abs();
        }
    }
    d
}
