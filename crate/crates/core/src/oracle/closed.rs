use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Probability that at least one of `n - 1` teammates sits on the reward
/// state when each is elsewhere independently with probability `ζ`.
pub fn theorem1_probability(zeta: f64, n: usize) -> Result<f64> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Domain(format!("zeta must be in (0, 1), got {zeta}")));
    }
    if n == 0 {
        return Err(Error::Domain("team size must be at least 1".into()));
    }
    Ok(1.0 - zeta.powi((n - 1) as i32))
}

/// Differential entropy (nats) of a Gaussian with variance `σ²`.
pub fn gaussian_reward_entropy(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {variance}")));
    }
    Ok(0.5 * (2.0 * PI * variance).ln() + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};
    use std::f64::consts::E;

    #[test]
    fn theorem1_examples() {
        assert_eq!(theorem1_probability(0.5, 2).unwrap(), 0.5);
        assert_eq!(theorem1_probability(0.5, 3).unwrap(), 0.75);
        assert_eq!(theorem1_probability(0.3, 1).unwrap(), 0.0);
        assert!(theorem1_probability(1.0, 2).is_err());
        assert!(theorem1_probability(0.0, 2).is_err());
    }

    #[test]
    fn gaussian_examples() {
        assert!((gaussian_reward_entropy(1.0 / (2.0 * PI)).unwrap() - 0.5).abs() < 1e-15);
        assert!((gaussian_reward_entropy(E / (2.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        let h = gaussian_reward_entropy(0.8).unwrap();
        let half = gaussian_reward_entropy(0.4).unwrap();
        assert!((h - half - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(gaussian_reward_entropy(0.0).is_err());
    }

    #[test]
    fn shrinking_variance_drives_entropy_down() {
        let hs: Vec<f64> = (1..=32)
            .map(|n| gaussian_reward_entropy(0.25 / n as f64).unwrap())
            .collect();
        assert!(hs.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        #[test]
        fn theorem1_strictly_increasing(zeta in 0.1f64..0.99, n in 1usize..12) {
            prop_assert!(theorem1_probability(zeta, n + 1).unwrap() > theorem1_probability(zeta, n).unwrap());
        }

        #[test]
        fn gaussian_entropy_increasing(v in 1e-6f64..1e3, k in 1.0001f64..10.0) {
            prop_assert!(gaussian_reward_entropy(v * k).unwrap() > gaussian_reward_entropy(v).unwrap());
        }
    }
}
