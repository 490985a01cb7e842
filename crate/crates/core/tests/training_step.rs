use bgn::agent::{build_agent, AgentNets, AgentVariant, NetworkConfig};
use bgn::belief::{belief_update, initial_belief};
use bgn::env::{Domain, DomainId, DomainKind, Env};
use bgn::tensor::{clip_global_norm, Tape, LOG_FLOOR};
use bgn::trainer::{a2c_losses, bgn_augment, collect_segment, replay_segment, Rollout, StepEnd, Workers};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const SMALL: NetworkConfig = NetworkConfig {
    hidden: 8,
    embedding: 4,
    head_init_scale: 1.0,
};

fn setup(id: DomainId, variant: AgentVariant, workers: usize, seed: u64) -> (Arc<Domain>, AgentNets, Workers, ChaCha8Rng) {
    let domain = Arc::new(Domain::builtin(id).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nets = build_agent(variant, &domain, SMALL, workers, &mut rng);
    let seeds: Vec<u64> = (0..workers as u64).map(|w| seed * 100 + w).collect();
    let envs = Workers::new(&domain, &seeds, domain.discount(), false);
    (domain, nets, envs, rng)
}

fn mean(rows: &[Vec<f64>]) -> f64 {
    let n: usize = rows.iter().map(Vec::len).sum();
    rows.iter().flatten().sum::<f64>() / n as f64
}

#[test]
fn loss_terms_match_recorded_quantities() {
    let (domain, nets, mut envs, mut rng) = setup(DomainId::Toy, AgentVariant::AH_CH_BGN, 4, 1);
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 8, &mut rng).unwrap();
    let returns = ro.returns(domain.discount(), 0.95);
    let (beta_c, beta_e) = (0.5, 0.01);
    let g = a2c_losses(&mut tape, &ro, &returns, beta_c, beta_e).unwrap();
    let g = bgn_augment(&mut tape, g, &ro).unwrap();
    let terms = g.terms(&tape);

    let mut actor = Vec::new();
    let mut critic = Vec::new();
    for t in 0..ro.length {
        let adv: Vec<f64> = (0..ro.num_workers).map(|w| returns[t][w] - ro.values[t][w]).collect();
        actor.push(adv.iter().zip(&ro.log_probs[t]).map(|(a, lp)| -a * lp).collect());
        critic.push(adv.iter().map(|a| beta_c * a * a).collect());
    }
    let cross = |pred: &[Array2<f64>]| -> f64 {
        let truth = ro.beliefs.as_ref().unwrap();
        let rows: Vec<Vec<f64>> = truth
            .iter()
            .zip(pred)
            .map(|(b, q)| {
                b.rows()
                    .into_iter()
                    .zip(q.rows())
                    .map(|(b, q)| -b.iter().zip(q.iter()).map(|(p, q)| p * q.max(LOG_FLOOR).ln()).sum::<f64>())
                    .collect()
            })
            .collect();
        mean(&rows)
    };
    assert!((terms.actor - mean(&actor)).abs() < 1e-12);
    assert!((terms.critic - mean(&critic)).abs() < 1e-12);
    assert!((terms.entropy + beta_e * mean(&ro.entropies)).abs() < 1e-12);
    assert!((terms.bgn_actor.unwrap() - cross(ro.actor_beliefs.as_ref().unwrap())).abs() < 1e-12);
    assert!((terms.bgn_critic.unwrap() - cross(ro.critic_beliefs.as_ref().unwrap())).abs() < 1e-12);
    assert!((terms.total - terms.sum_of_terms()).abs() < 1e-12);
}

#[test]
fn returns_equal_to_values_zero_the_actor_and_critic_terms() {
    let (_, nets, mut envs, mut rng) = setup(DomainId::Hallway, AgentVariant::AH_CH, 3, 2);
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 5, &mut rng).unwrap();
    let returns = ro.values.clone();
    let terms = a2c_losses(&mut tape, &ro, &returns, 0.5, 0.01).unwrap().terms(&tape);
    assert_eq!(terms.actor, 0.0);
    assert_eq!(terms.critic, 0.0);
}

#[test]
fn uniform_policy_entropy_term_is_minus_beta_log_actions() {
    let (domain, mut nets, mut envs, mut rng) = setup(DomainId::Hallway, AgentVariant::AH_CH, 3, 3);
    for name in ["actor/policy/w", "actor/policy/b"] {
        let id = nets.params.find(name).unwrap();
        nets.params.get_mut(id).fill(0.0);
    }
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 5, &mut rng).unwrap();
    let returns = ro.returns(domain.discount(), 0.95);
    let beta_e = 0.37;
    let terms = a2c_losses(&mut tape, &ro, &returns, 0.5, beta_e).unwrap().terms(&tape);
    let want = -beta_e * (domain.num_actions() as f64).ln();
    assert!((terms.entropy - want).abs() < 1e-12);
}

#[test]
fn cross_entropy_is_bounded_by_the_target_entropy() {
    let params = bgn::tensor::ParamSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (n, k) = (rng.random_range(1..5), rng.random_range(1..7));
        let dist = |rng: &mut ChaCha8Rng| {
            let mut m = Array2::from_shape_fn((n, k), |_| rng.random::<f64>() + 1e-3);
            for mut row in m.rows_mut() {
                let z = row.sum();
                row.mapv_inplace(|x| x / z);
            }
            m
        };
        let (truth, pred) = (dist(&mut rng), dist(&mut rng));
        let entropy: Vec<f64> = truth.rows().into_iter().map(|r| -r.iter().map(|p| p * p.ln()).sum::<f64>()).collect();
        let mut tape = Tape::new(&params);
        let q = tape.input(pred);
        let ce = tape.cross_entropy(truth.clone(), q).unwrap();
        let same = tape.input(truth.clone());
        let self_ce = tape.cross_entropy(truth.clone(), same).unwrap();
        for i in 0..n {
            assert!(tape.value(ce)[[i, 0]] >= entropy[i] - 1e-9);
            assert!((tape.value(self_ce)[[i, 0]] - entropy[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn actor_term_has_no_gradient_on_critic_parameters() {
    let (domain, nets, mut envs, mut rng) = setup(DomainId::Toy, AgentVariant::AH_CH_BGN, 3, 5);
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 6, &mut rng).unwrap();
    let returns = ro.returns(domain.discount(), 0.95);
    let g = a2c_losses(&mut tape, &ro, &returns, 0.5, 0.01).unwrap();
    let actor_grads = tape.backward(g.actor).unwrap();
    let critic_grads = tape.backward(g.critic).unwrap();
    let is_zero = |m: Option<&Array2<f64>>| m.is_none_or(|m| m.iter().all(|&x| x == 0.0));
    for id in nets.params.ids() {
        let name = nets.params.name(id);
        if name.starts_with("critic/") {
            assert!(is_zero(actor_grads.get(id)), "{name}");
        } else {
            assert!(is_zero(critic_grads.get(id)), "{name}");
        }
    }
}

#[test]
fn clipped_gradient_norm_is_at_most_the_limit() {
    let (domain, nets, mut envs, mut rng) = setup(DomainId::Hallway, AgentVariant::AH_CH_BGN, 4, 6);
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 5, &mut rng).unwrap();
    let returns = ro.returns(domain.discount(), 0.95);
    let g = a2c_losses(&mut tape, &ro, &returns, 0.5, 0.01).unwrap();
    let g = bgn_augment(&mut tape, g, &ro).unwrap();
    let mut grads = tape.backward(g.total).unwrap();
    let before = grads.global_norm();
    let reported = clip_global_norm(&mut grads, 0.5);
    assert_eq!(reported, before);
    assert!(grads.global_norm() <= 0.5 + 1e-9);
    if before <= 0.5 {
        assert_eq!(grads.global_norm(), before);
    }
}

#[test]
fn replayed_forward_pass_reproduces_recorded_values() {
    let (_, mut nets, mut envs, mut rng) = setup(DomainId::Toy, AgentVariant::AH_CH_BGN, 4, 7);
    for _ in 0..3 {
        let ro: Rollout = {
            let mut tape = Tape::new(&nets.params);
            let placed = nets.place(&mut tape).unwrap();
            collect_segment(&mut tape, &nets, &placed, &mut envs, 7, &mut rng).unwrap().0
        };
        let mut tape = Tape::new(&nets.params);
        let placed = nets.place(&mut tape).unwrap();
        let vars = replay_segment(&mut tape, &nets, &placed, &ro).unwrap();
        for t in 0..ro.length {
            assert_eq!(tape.value(vars.value[t]).column(0).to_vec(), ro.values[t]);
            assert_eq!(tape.value(vars.actor_belief[t]), &ro.actor_beliefs.as_ref().unwrap()[t]);
        }
        nets.actor_hidden = ro.actor_hidden;
        nets.critic_hidden = ro.critic_hidden;
    }
}

#[test]
fn episode_end_restarts_from_zero_recurrent_state() {
    let (_, nets, mut envs, mut rng) = setup(DomainId::Toy, AgentVariant::AH_CH, 4, 8);
    let mut tape = Tape::new(&nets.params);
    let placed = nets.place(&mut tape).unwrap();
    let (ro, _) = collect_segment(&mut tape, &nets, &placed, &mut envs, 20, &mut rng).unwrap();
    let mut checked = 0;
    for t in 0..ro.length - 1 {
        for w in 0..ro.num_workers {
            if ro.ends[t][w] != StepEnd::Terminated {
                continue;
            }
            // a fresh single-worker evaluation from zero state must give the same policy
            let mut fresh = nets.clone();
            fresh.reset_hidden(w);
            let (policy, _) = fresh.actor_forward(&ro.actor_inputs[t + 1][w], w).unwrap();
            let recorded = tape.value(ro.vars.policy[t + 1]).row(w).to_vec();
            for (a, b) in policy.iter().zip(&recorded) {
                assert!((a - b).abs() < 1e-12);
            }
            let (value, _) = fresh.critic_forward(&ro.critic_inputs[t + 1][w], w).unwrap();
            assert!((value - ro.values[t + 1][w]).abs() < 1e-12);
            checked += 1;
        }
    }
    assert!(checked > 0, "no episode ended inside the segment");
}

#[test]
fn environment_belief_matches_offline_filter() {
    let domain = Arc::new(Domain::builtin(DomainId::RockSample44).unwrap());
    let DomainKind::Tabular(model) = &domain.kind else { unreachable!() };
    let mut env = Env::new(Arc::clone(&domain), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let first = env.reset();
        let mut b = initial_belief(model);
        assert_eq!(first.belief, b);
        loop {
            let a = rng.random_range(0..model.num_actions());
            let r = env.step(a).unwrap();
            b = belief_update(model, &b, a, r.observation).unwrap();
            for (p, q) in r.belief.probs().iter().zip(b.probs()) {
                assert!((p - q).abs() < 1e-12);
            }
            assert!(r.belief.probs()[r.state] > 0.0);
            if r.done() {
                break;
            }
        }
    }
}
