/// How a recorded step ended.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum StepEnd {
    Continue,
    /// True episode end: zero continuation value.
    Terminated,
    /// Time-limit cut: continue from the critic's value of the final
    /// observation.
    Truncated { value: f64 },
}

/// λ-returns for one worker's segment by backward recursion
/// `R_t = r_t + γ[(1 − λ) V_{t+1} + λ R_{t+1}]`, seeded with
/// `R_T = V_T = bootstrap`.
pub fn lambda_returns(rewards: &[f64], values: &[f64], ends: &[StepEnd], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    assert!(values.len() == n && ends.len() == n, "aligned arrays");
    let mut out = vec![0.0; n];
    let mut next_return = bootstrap;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        let r = rewards[t];
        out[t] = match ends[t] {
            StepEnd::Terminated => r,
            StepEnd::Truncated { value } => r + gamma * value,
            StepEnd::Continue => r + gamma * ((1.0 - lambda) * next_value + lambda * next_return),
        };
        next_return = out[t];
        next_value = values[t];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminated_three_step_example() {
        let (g, l) = (0.95, 0.95);
        let ends = [StepEnd::Continue, StepEnd::Continue, StepEnd::Terminated];
        let r = lambda_returns(&[0.0, 0.0, 1.0], &[0.2, 0.3, 0.4], &ends, 0.0, g, l);
        let r2 = 1.0;
        let r1 = g * ((1.0 - l) * 0.4 + l * r2);
        let r0 = g * ((1.0 - l) * 0.3 + l * r1);
        assert_eq!(r, vec![r0, r1, r2]);
    }

    #[test]
    fn truncation_bootstraps_from_its_own_value() {
        let ends = [StepEnd::Truncated { value: 2.0 }, StepEnd::Continue];
        let r = lambda_returns(&[1.0, 0.5], &[0.0, 0.7], &ends, 3.0, 0.5, 0.9);
        assert_eq!(r, vec![2.0, 0.5 + 1.5]);
    }
}
