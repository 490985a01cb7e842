mod common;

use bgn::env::{Domain, DomainId, DomainKind};
use bgn::pomdp::{parse_pomdp, serialize_pomdp, validate_model, PomdpModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_same(a: &PomdpModel, b: &PomdpModel) {
    let (ns, na, no) = (a.num_states(), a.num_actions(), a.num_observations());
    assert_eq!((ns, na, no), (b.num_states(), b.num_actions(), b.num_observations()));
    assert_eq!(a.discount, b.discount);
    assert_eq!(a.start, b.start);
    assert_eq!(a.state_names, b.state_names);
    assert_eq!(a.action_names, b.action_names);
    assert_eq!(a.observation_names, b.observation_names);
    for s in 0..ns {
        for act in 0..na {
            assert_eq!(a.transition_row(s, act), b.transition_row(s, act));
            for n in 0..ns {
                assert_eq!(a.observation_row(n, act), b.observation_row(n, act));
                assert_eq!(a.is_terminal(s, act, n), b.is_terminal(s, act, n));
                for o in 0..no {
                    assert_eq!(a.reward(s, act, n, o), b.reward(s, act, n, o));
                }
            }
        }
    }
}

fn decorated_model(seed: u64) -> PomdpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = common::random_model(5, 3, 4, &mut rng);
    m.discount = rng.random_range(0.5..1.0);
    let (ns, na, no) = (m.num_states(), m.num_actions(), m.num_observations());
    if rng.random() {
        m.state_names = Some((0..ns).map(|i| format!("s{i}x")).collect());
    }
    if rng.random() {
        m.action_names = Some((0..na).map(|i| format!("act-{i}")).collect());
    }
    for s in 0..ns {
        for a in 0..na {
            match rng.random_range(0..3) {
                0 => {}
                1 => m.set_reward_broadcast(s, a, rng.random_range(-5.0..5.0)),
                _ => {
                    for n in 0..ns {
                        for o in 0..no {
                            if rng.random::<f64>() < 0.3 {
                                m.set_reward(s, a, n, o, rng.random_range(-5.0..5.0));
                            }
                        }
                    }
                }
            }
            for n in 0..ns {
                if m.transition(s, a, n) > 0.0 && rng.random::<f64>() < 0.2 {
                    m.set_terminal(s, a, n, true);
                }
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let m = decorated_model(seed);
        prop_assert!(validate_model(&m).is_empty());
        let text = serialize_pomdp(&m);
        let back = parse_pomdp(&text).unwrap();
        assert_same(&m, &back);
        prop_assert_eq!(serialize_pomdp(&back), text);
    }
}

#[test]
fn builtin_tabular_domains_round_trip() {
    for id in [DomainId::Hallway, DomainId::RockSample44, DomainId::Toy] {
        let d = Domain::builtin(id).unwrap();
        let DomainKind::Tabular(m) = &d.kind else { unreachable!() };
        let back = parse_pomdp(&serialize_pomdp(m)).unwrap();
        assert_same(m, &back);
    }
}
