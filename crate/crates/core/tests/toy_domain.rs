mod common;

use bgn::env::{toy_model, TOY_RIGHT, TOY_STATES};
use bgn::trainer::{train, TrainConfig};

#[test]
fn always_right_is_optimal_on_the_toy() {
    let m = toy_model();
    let best = common::best_deterministic_policy_value(&m);
    let always_right = 0.5 * 0.9f64.powi(3) + 0.5 * 0.9f64.powi(2);
    assert!((best - always_right).abs() < 1e-12);
    assert!((best - 0.7695).abs() < 1e-12);
    assert_eq!(m.num_states(), TOY_STATES);
    assert_eq!(m.reward(TOY_STATES - 1, TOY_RIGHT, 0, 0), 1.0);
}

#[test]
fn full_loss_gradient_matches_central_differences() {
    for seed in [3, 11] {
        let problem = common::toy_loss_problem(seed);
        let (rel, abs) = common::gradient_errors(&problem.nets.params, 1e-5, |t| problem.loss(t));
        assert!(rel <= 1e-4, "seed {seed}: relative error {rel:e}");
        assert!(abs <= 1e-9, "seed {seed}: absolute error {abs:e}");
    }
}

#[test]
fn actor_critic_learns_the_toy_optimum() {
    let config: TrainConfig = TrainConfig::from_toml_str(
        r#"
        domain = "toy"
        variant = "ah-ch"
        seed = 0
        total_steps = 50000
        sequential = true
        [optimizer]
        epsilon = 1e-5
        "#,
    )
    .unwrap();
    let log = train(&config).unwrap();
    let episodes: Vec<_> = log.episodes().collect();
    let tail: Vec<f64> = episodes.iter().rev().take(200).map(|e| e.ret).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(mean >= 0.7695 - 0.02, "final mean return {mean}");
}
