use super::*;
use crate::agent::NetworkConfig;
use crate::env::DomainId;

fn tiny(domain: &str, variant: &str, steps: u64) -> TrainConfig {
    TrainConfig {
        domain: domain.into(),
        variant: variant.parse().unwrap(),
        total_steps: Some(steps),
        num_workers: 4,
        network: NetworkConfig {
            hidden: 12,
            embedding: 6,
            head_init_scale: 1.0,
        },
        sequential: true,
        ..TrainConfig::default()
    }
}

#[test]
fn entropy_schedule_endpoints() {
    assert_eq!(entropy_coefficient(0, DomainId::RockSample44), 2.0);
    assert_eq!(entropy_coefficient(3_000_000, DomainId::RockSample55), 0.2);
    assert_eq!(entropy_coefficient(0, DomainId::Hallway), 0.01);
    assert_eq!(entropy_coefficient(9_999_999, DomainId::TwoBumps1D), 0.01);
}

#[test]
fn config_rejects_unknown_keys_and_reports_overrides() {
    assert!(matches!(TrainConfig::from_toml_str("lamda = 0.9"), Err(TrainError::Config(_))));
    assert!(TrainConfig::from_toml_str("[optimizer]\nmomentum = 0.9").is_err());
    let c = TrainConfig::from_toml_str("seed = 3\n[optimizer]\nepsilon = 1e-5").unwrap();
    assert_eq!(c.optimizer.learning_rate, 7e-4);
    assert_eq!(c.overrides(), vec!["optimizer.epsilon = 0.00001".to_string(), "seed = 3".to_string()]);
    assert!(TrainConfig::default().overrides().is_empty());
}

#[test]
fn invalid_config_fails_before_training() {
    let mut c = tiny("toy", "ah-ch", 100);
    c.lambda = 1.5;
    assert!(matches!(Trainer::new(&c), Err(TrainError::Config(_))));
    let c = tiny("no-such-domain", "ah-ch", 100);
    assert!(matches!(Trainer::new(&c), Err(TrainError::Env(_))));
}

#[test]
fn budget_and_record_invariants() {
    let c = tiny("hallway", "ah-ch+bgn", 400);
    let log = train(&c).unwrap();
    let updates: Vec<_> = log.updates().collect();
    assert_eq!(updates.len(), 20);
    for u in &updates {
        assert!((u.losses.total - u.losses.sum_of_terms()).abs() <= 1e-12);
        assert_eq!(u.beta_e, 0.01);
        assert!(u.grad_norm.is_finite());
    }
    assert_eq!(updates.last().unwrap().env_steps, 400);
}

#[test]
fn sequential_runs_are_identical() {
    let c = tiny("twobumps-1d", "ah-ch+bgn", 300);
    assert_eq!(train(&c).unwrap().to_jsonl(), train(&c).unwrap().to_jsonl());
    let mut p = c.clone();
    p.sequential = false;
    assert_eq!(train(&c).unwrap(), train(&p).unwrap());
}

#[test]
fn random_agent_logs_only_episodes() {
    let log = train(&tiny("toy", "random", 2000)).unwrap();
    assert_eq!(log.updates().count(), 0);
    assert!(log.episodes().count() > 10);
}

#[test]
fn checkpoint_reloads_the_same_agent() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny("toy", "ah-cb+bgn", 200);
    let trainer = train_to_dir(&c, dir.path()).unwrap();
    let (nets, domain, meta) = load_agent(&dir.path().join(FINAL_CHECKPOINT), 1).unwrap();
    assert_eq!(domain.name, "toy");
    assert_eq!(meta.env_steps, 200);
    assert_eq!(nets.params, trainer.nets().params);
    let log = TrainingLog::read(&dir.path().join(LOG_FILE)).unwrap();
    assert_eq!(log.updates().count(), 10);
}
