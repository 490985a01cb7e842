//! Runs a force-feedback robot domain and prints the factored belief over
//! the hidden object configuration as a grid.
//!
//! `cargo run --example momdp_belief -- [topplate|twobumps-1d|twobumps-2d] [seed]`

use bgn::env::{Domain, DomainKind, Env};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn main() -> anyhow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "twobumps-1d".into());
    let seed: u64 = std::env::args().nth(2).map_or(Ok(0), |s| s.parse())?;
    let domain = Arc::new(Domain::resolve(&name)?);
    let DomainKind::Robot(robot) = &domain.kind else {
        anyhow::bail!("{name} is not a robot domain");
    };
    let (rows, cols) = robot.y_grid();
    let mut env = Env::new(Arc::clone(&domain), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = env.reset();
    for t in 0..12 {
        println!("t={t} x={} entropy {:.3} nats", r.observation, r.belief.entropy());
        for i in 0..rows {
            let line: String = (0..cols)
                .map(|j| match r.belief.probs()[i * cols + j] {
                    p if p == 0.0 => '.',
                    p if p < 0.01 => ':',
                    p if p < 0.1 => 'o',
                    _ => '#',
                })
                .collect();
            println!("  {line}");
        }
        if r.done() {
            break;
        }
        let a = rng.random_range(0..domain.num_actions());
        println!("  action {}", domain.action_name(a));
        r = env.step(a)?;
    }
    Ok(())
}
