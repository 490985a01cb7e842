//! Tracks the exact belief of a tabular POMDP along a sampled episode.
//!
//! `cargo run --example belief_filter -- [domain] [seed]`

use bgn::env::{Domain, DomainKind, Env};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn main() -> anyhow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "rocksample-4-4".into());
    let seed: u64 = std::env::args().nth(2).map_or(Ok(0), |s| s.parse())?;
    let domain = Arc::new(Domain::resolve(&name)?);
    if !matches!(domain.kind, DomainKind::Tabular(_)) {
        anyhow::bail!("{name} is not a tabular domain; see the momdp_belief example");
    }
    let mut env = Env::new(Arc::clone(&domain), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = env.reset();
    println!("t=0 entropy {:.3} nats, true state {}", first.belief.entropy(), first.state);
    for t in 1..=20 {
        let a = rng.random_range(0..domain.num_actions());
        let r = env.step(a)?;
        let top = r.belief.probs().iter().copied().fold(0.0, f64::max);
        println!(
            "t={t} {:<12} obs {:>2} reward {:>6.1} entropy {:.3} nats, P(true state) {:.3}, max {:.3}",
            domain.action_name(a),
            r.observation,
            r.reward,
            r.belief.entropy(),
            r.belief.probs()[r.state],
            top
        );
        if r.done() {
            break;
        }
    }
    Ok(())
}
