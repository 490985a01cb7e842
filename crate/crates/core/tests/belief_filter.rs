mod common;

use bgn::belief::{belief_update, flatten_momdp, initial_belief, momdp_belief_update, Belief, MomdpBelief};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_matches_sequence_enumeration(seed in any::<u64>(), depth in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(4, 3, 3, &mut rng);
        let mut s = draw(&m.start, &mut rng);
        let mut b = initial_belief(&m);
        let mut history = Vec::new();
        for _ in 0..depth {
            let a = rng.random_range(0..m.num_actions());
            s = draw(m.transition_row(s, a), &mut rng);
            let o = draw(m.observation_row(s, a), &mut rng);
            history.push((a, o));
            b = belief_update(&m, &b, a, o).unwrap();
            let oracle = common::posterior_by_sequences(&m, &history).unwrap();
            for (x, y) in b.probs().iter().zip(&oracle) {
                prop_assert!((x - y).abs() <= 1e-9, "{:?} vs {:?}", b.probs(), oracle);
            }
        }
    }

    #[test]
    fn impossible_observation_is_an_error(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(4, 2, 4, &mut rng);
        let b = initial_belief(&m);
        for a in 0..m.num_actions() {
            for o in 0..m.num_observations() {
                let possible = common::posterior_by_sequences(&m, &[(a, o)]).is_some();
                prop_assert_eq!(belief_update(&m, &b, a, o).is_ok(), possible);
            }
        }
    }

    #[test]
    fn updated_belief_is_a_distribution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_model(6, 3, 3, &mut rng);
        let b = Belief::new(common::sparse_simplex(m.num_states(), &mut rng)).unwrap();
        for a in 0..m.num_actions() {
            for o in 0..m.num_observations() {
                if let Ok(next) = belief_update(&m, &b, a, o) {
                    let total: f64 = next.probs().iter().sum();
                    prop_assert!((total - 1.0).abs() <= 1e-9);
                    prop_assert!(next.probs().iter().all(|&p| p >= 0.0));
                }
            }
        }
    }

    #[test]
    fn factored_filter_matches_flat_filter(seed in any::<u64>(), depth in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_factored(3, 3, &mut rng);
        let flat = flatten_momdp(&m);
        let (ny, no) = (m.num_y(), m.num_observations());
        let mut s = draw(&m.start, &mut rng);
        let mut fb = MomdpBelief::initial(&m, s / ny).unwrap();
        // the flat filter starts from the start distribution restricted to the observed x
        let mut b = Belief::from_weights(
            (0..flat.num_states()).map(|i| if i / ny == s / ny { m.start[i] } else { 0.0 }).collect(),
        ).unwrap();
        for _ in 0..depth {
            let a = rng.random_range(0..m.num_actions());
            s = draw(flat.transition_row(s, a), &mut rng);
            let flat_o = draw(flat.observation_row(s, a), &mut rng);
            let (x, o) = (flat_o / no, flat_o % no);
            prop_assert_eq!(x, s / ny);
            fb = momdp_belief_update(&m, &fb, a, x, o).unwrap();
            b = belief_update(&flat, &b, a, flat_o).unwrap();
            for (i, &p) in b.probs().iter().enumerate() {
                let factored = if i / ny == fb.x { fb.hidden.probs()[i % ny] } else { 0.0 };
                prop_assert!((p - factored).abs() <= 1e-9);
            }
        }
    }
}
