use bgn::trainer::{lambda_returns, StepEnd};
use proptest::prelude::*;

/// λ-return from the forward view: a (1 − λ)λ^(n−1) mixture of n-step
/// returns, with the full remaining return taking the leftover weight.
fn forward_view(r: &[f64], v: &[f64], ends: &[StepEnd], boot: f64, gamma: f64, lambda: f64, t: usize) -> f64 {
    let n = r.len();
    let last = (t..n).find(|&k| ends[k] != StepEnd::Continue).unwrap_or(n - 1);
    let tail = match ends[last] {
        StepEnd::Terminated => 0.0,
        StepEnd::Truncated { value } => value,
        StepEnd::Continue => boot,
    };
    let span = last - t + 1;
    let discounted_rewards = |k: usize| -> f64 { (0..k).map(|i| gamma.powi(i as i32) * r[t + i]).sum() };
    let mut total = 0.0;
    for steps in 1..span {
        let g = discounted_rewards(steps) + gamma.powi(steps as i32) * v[t + steps];
        total += (1.0 - lambda) * lambda.powi(steps as i32 - 1) * g;
    }
    let full = discounted_rewards(span) + gamma.powi(span as i32) * tail;
    total + lambda.powi(span as i32 - 1) * full
}

fn end_strategy() -> impl Strategy<Value = StepEnd> {
    prop_oneof![
        6 => Just(StepEnd::Continue),
        1 => Just(StepEnd::Terminated),
        1 => (-2.0..2.0f64).prop_map(|value| StepEnd::Truncated { value }),
    ]
}

fn segment() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<StepEnd>)> {
    (1usize..10).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(end_strategy(), n),
        )
    })
}

proptest! {
    #[test]
    fn recursion_matches_forward_view(
        (r, v, ends) in segment(),
        boot in -2.0..2.0f64,
        gamma in 0.0..1.0f64,
        lambda in 0.0..=1.0f64,
    ) {
        let got = lambda_returns(&r, &v, &ends, boot, gamma, lambda);
        for t in 0..r.len() {
            let want = forward_view(&r, &v, &ends, boot, gamma, lambda, t);
            prop_assert!((got[t] - want).abs() <= 1e-10, "t={} {} vs {}", t, got[t], want);
        }
    }

    #[test]
    fn advantages_are_discounted_td_errors(
        (r, v, ends) in segment(),
        boot in -2.0..2.0f64,
        gamma in 0.0..1.0f64,
        lambda in 0.0..=1.0f64,
    ) {
        let n = r.len();
        let next_value = |t: usize| match ends[t] {
            StepEnd::Terminated => 0.0,
            StepEnd::Truncated { value } => value,
            StepEnd::Continue if t + 1 < n => v[t + 1],
            StepEnd::Continue => boot,
        };
        let delta: Vec<f64> = (0..n).map(|t| r[t] + gamma * next_value(t) - v[t]).collect();
        let got = lambda_returns(&r, &v, &ends, boot, gamma, lambda);
        for t in 0..n {
            let mut adv = 0.0;
            let mut weight = 1.0;
            for k in t..n {
                adv += weight * delta[k];
                if ends[k] != StepEnd::Continue {
                    break;
                }
                weight *= gamma * lambda;
            }
            prop_assert!((got[t] - v[t] - adv).abs() <= 1e-10);
        }
    }

    #[test]
    fn terminated_step_ignores_everything_after_it(
        (r, v, mut ends) in segment(),
        boot in -2.0..2.0f64,
        other_boot in -2.0..2.0f64,
        gamma in 0.0..1.0f64,
        lambda in 0.0..=1.0f64,
    ) {
        let n = r.len();
        ends[n - 1] = StepEnd::Terminated;
        let a = lambda_returns(&r, &v, &ends, boot, gamma, lambda);
        let b = lambda_returns(&r, &v, &ends, other_boot, gamma, lambda);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn three_step_episode_by_hand() {
    let (g, l) = (0.9, 0.5);
    let r = [0.0, 0.0, 1.0];
    let v = [0.2, 0.4, 0.8];
    let ends = [StepEnd::Continue, StepEnd::Continue, StepEnd::Terminated];
    let got = lambda_returns(&r, &v, &ends, 123.0, g, l);
    let r2 = 1.0;
    let r1 = 0.0 + g * (0.5 * 0.8 + 0.5 * r2);
    let r0 = 0.0 + g * (0.5 * 0.4 + 0.5 * r1);
    assert_eq!(got, vec![r0, r1, r2]);
}
