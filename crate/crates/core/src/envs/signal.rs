//! Reward and signal bookkeeping shared by the two- and four-state games and
//! by the exact joint models built on them.
//!
//! Within a step: every agent moves simultaneously; each agent that ends the
//! move on `s_r` earns `r` iff the signal was set before the move; then the
//! signal becomes 1 if anyone now occupies `s_c`, 0 if a reward was just
//! consumed, and otherwise keeps its value.

/// Cue state: visiting it sets the signal.
pub const S_C: u8 = 0;
/// Reward state: pays `r` while the signal is set.
pub const S_R: u8 = 1;
/// Inert four-state extras.
pub const S_3: u8 = 2;
pub const S_4: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalSettlement {
    /// Whether agents on `s_r` are paid this step.
    pub paid: bool,
    pub next_signal: bool,
}

pub fn settle_signal(signal_before: bool, on_reward: usize, on_cue: usize) -> SignalSettlement {
    let paid = signal_before && on_reward > 0;
    let next_signal = if on_cue > 0 {
        true
    } else if paid {
        false
    } else {
        signal_before
    };
    SignalSettlement { paid, next_signal }
}

/// Per-agent rewards and the next signal for a set of landing positions.
pub(crate) fn resolve(landing: &[u8], signal_before: bool, reward_r: f64) -> (Vec<f64>, bool) {
    let on_reward = landing.iter().filter(|&&p| p == S_R).count();
    let on_cue = landing.iter().filter(|&&p| p == S_C).count();
    let s = settle_signal(signal_before, on_reward, on_cue);
    let rewards = landing
        .iter()
        .map(|&p| if s.paid && p == S_R { reward_r } else { 0.0 })
        .collect();
    (rewards, s.next_signal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_case_update() {
        // occupancy wins even when reward is consumed
        assert_eq!(
            settle_signal(true, 2, 1),
            SignalSettlement { paid: true, next_signal: true }
        );
        // consumed and vacant -> reset
        assert_eq!(
            settle_signal(true, 1, 0),
            SignalSettlement { paid: true, next_signal: false }
        );
        // nothing happened -> persists
        assert_eq!(
            settle_signal(true, 0, 0),
            SignalSettlement { paid: false, next_signal: true }
        );
        assert_eq!(
            settle_signal(false, 3, 0),
            SignalSettlement { paid: false, next_signal: false }
        );
    }

    #[test]
    fn co_located_collectors_all_paid() {
        let (r, c) = resolve(&[S_R, S_R], true, 1.5);
        assert_eq!(r, vec![1.5, 1.5]);
        assert!(!c);
    }
}
