use rand::Rng;

use crate::error::{Error, Result};

/// Stationary stochastic policy over individual observations.
#[derive(Debug, Clone, PartialEq)]
pub enum StationaryPolicy {
    /// Same uniform distribution in every state.
    Uniform { actions: usize },
    /// Explicit per-state distributions.
    Table(Vec<Vec<f64>>),
}

pub fn uniform_random_policy(action_count: usize) -> Result<StationaryPolicy> {
    if action_count == 0 {
        return Err(Error::Config("policy needs at least one action".into()));
    }
    Ok(StationaryPolicy::Uniform {
        actions: action_count,
    })
}

impl StationaryPolicy {
    /// Builds a table policy, checking every row is a distribution.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if width == 0 {
            return Err(Error::Config("policy table is empty".into()));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Shape {
                    what: "policy row",
                    expected: width,
                    got: row.len(),
                });
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(StationaryPolicy::Table(rows))
    }

    pub fn action_count(&self) -> usize {
        match self {
            StationaryPolicy::Uniform { actions } => *actions,
            StationaryPolicy::Table(rows) => rows[0].len(),
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            StationaryPolicy::Uniform { actions } => {
                if a < *actions {
                    1.0 / *actions as f64
                } else {
                    0.0
                }
            }
            StationaryPolicy::Table(rows) => rows
                .get(s)
                .and_then(|r| r.get(a))
                .copied()
                .unwrap_or(0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        match self {
            StationaryPolicy::Uniform { actions } => rng.gen_range(0..*actions),
            StationaryPolicy::Table(rows) => {
                let row = &rows[s];
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return a;
                    }
                }
                // rounding left a sliver at the top
                row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
            }
        }
    }
}

fn shannon(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.ln()
        })
        .sum()
}

/// Weighted mean over states of the entropy (nats) of each state's
/// normalized action frequencies.
pub fn empirical_policy_entropy(counts: &[Vec<u64>], weights: &[f64]) -> Result<f64> {
    if counts.len() != weights.len() {
        return Err(Error::Shape {
            what: "visitation weights",
            expected: counts.len(),
            got: weights.len(),
        });
    }
    if counts.iter().all(|row| row.iter().all(|&c| c == 0)) {
        return Err(Error::Estimation("no recorded actions".into()));
    }
    let mut acc = 0.0;
    let mut mass = 0.0;
    for (row, &w) in counts.iter().zip(weights) {
        if w < 0.0 {
            return Err(Error::Domain(format!("negative visitation weight {w}")));
        }
        if row.iter().any(|&c| c > 0) {
            acc += w * shannon(row);
            mass += w;
        }
    }
    if mass == 0.0 {
        return Err(Error::Estimation("visited states carry zero weight".into()));
    }
    Ok(acc / mass)
}

/// [`empirical_policy_entropy`] weighted by each state's own visit count.
pub fn visit_weighted_entropy(counts: &[Vec<u64>]) -> Result<f64> {
    let weights: Vec<f64> = counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    empirical_policy_entropy(counts, &weights)
}
