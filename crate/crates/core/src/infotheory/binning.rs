use crate::error::{Error, Result};

/// Uniform-width bins anchored at `origin`: bin `k` covers
/// `[origin + k·width, origin + (k+1)·width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnBinning {
    width: f64,
    origin: f64,
}

impl ReturnBinning {
    pub fn new(width: f64) -> Result<Self> {
        Self::with_origin(width, 0.0)
    }

    pub fn with_origin(width: f64, origin: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!("bin width must be positive, got {width}")));
        }
        if !origin.is_finite() {
            return Err(Error::Config(format!("bin origin must be finite, got {origin}")));
        }
        Ok(ReturnBinning { width, origin })
    }

    /// Default return binning: width `r / (4·n_max)` so every lattice
    /// level `k·r/n` of a team-averaged reward stays separated.
    pub fn for_team_lattice(reward_r: f64, n_max: usize) -> Result<Self> {
        Self::new(reward_r / (4.0 * n_max.max(1) as f64))
    }

    /// Coarse grid centred on multiples of `r/2`, used for per-step team
    /// reward entropy.
    pub fn coarse_reward_grid(reward_r: f64) -> Result<Self> {
        Self::with_origin(reward_r / 2.0, -reward_r / 4.0)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn bin_of(&self, z: f64) -> i64 {
        ((z - self.origin) / self.width).floor() as i64
    }

    pub fn lower_edge(&self, bin: i64) -> f64 {
        self.origin + bin as f64 * self.width
    }

    /// Number of bins needed to span `[min, max]`.
    pub fn bin_count(&self, min: f64, max: f64) -> usize {
        if max < min {
            return 0;
        }
        (self.bin_of(max) - self.bin_of(min) + 1) as usize
    }
}
