use crate::error::{Error, Result};

/// Dense action-value table, zero-initialised.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Result<Self> {
        if states == 0 || actions == 0 {
            return Err(Error::Config(format!(
                "q-table needs at least one state and action, got {states}x{actions}"
            )));
        }
        Ok(QTable {
            states,
            actions,
            values: vec![0.0; states * actions],
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.states {
            return Err(Error::Index {
                what: "state",
                index: s,
                limit: self.states,
            });
        }
        Ok(())
    }

    fn offset(&self, s: usize, a: usize) -> Result<usize> {
        self.check_state(s)?;
        if a >= self.actions {
            return Err(Error::Index {
                what: "action",
                index: a,
                limit: self.actions,
            });
        }
        Ok(s * self.actions + a)
    }

    pub fn get(&self, s: usize, a: usize) -> Result<f64> {
        Ok(self.values[self.offset(s, a)?])
    }

    pub fn set(&mut self, s: usize, a: usize, q: f64) -> Result<()> {
        let k = self.offset(s, a)?;
        self.values[k] = q;
        Ok(())
    }

    pub fn row(&self, s: usize) -> Result<&[f64]> {
        self.check_state(s)?;
        Ok(&self.values[s * self.actions..(s + 1) * self.actions])
    }

    pub fn max_value(&self, s: usize) -> Result<f64> {
        Ok(self.row(s)?.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Greedy actions in state `s`, in index order.
    pub fn greedy_actions(&self, s: usize) -> Result<Vec<usize>> {
        let row = self.row(s)?;
        let best = self.max_value(s)?;
        Ok((0..row.len()).filter(|&a| row[a] == best).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, q| m.max(q.abs()))
    }
}
