//! Trains one agent and prints a running summary.
//!
//! `cargo run --release --example train_agent -- [domain] [variant] [steps] [seed] [rmsprop-epsilon]`

use bgn::trainer::{LogRecord, TrainConfig, Trainer};
use std::time::Instant;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut config = TrainConfig {
        domain: args.first().cloned().unwrap_or_else(|| "toy".into()),
        variant: args.get(1).map_or("ah-ch+bgn", String::as_str).parse()?,
        total_steps: args.get(2).map(|s| s.parse()).transpose()?,
        seed: args.get(3).map_or(Ok(0), |s| s.parse())?,
        sequential: true,
        ..TrainConfig::default()
    };
    if let Some(eps) = args.get(4) {
        config.optimizer.epsilon = eps.parse()?;
    }
    let mut trainer = Trainer::new(&config)?;
    let start = Instant::now();
    let mut recent: Vec<(f64, bool)> = Vec::new();
    let mut last_print = 0;
    trainer.run(|t, r| {
        if let LogRecord::Episode(e) = r {
            recent.push((e.ret, e.success));
            if recent.len() > 100 {
                recent.remove(0);
            }
        }
        if t.env_steps() >= last_print + 20_000 && !recent.is_empty() {
            last_print = t.env_steps();
            let n = recent.len() as f64;
            let ret = recent.iter().map(|r| r.0).sum::<f64>() / n;
            let succ = recent.iter().filter(|r| r.1).count() as f64 / n;
            println!(
                "steps {:>8}  return {ret:.3}  success {succ:.2}  {:.0}s",
                t.env_steps(),
                start.elapsed().as_secs_f64()
            );
        }
        Ok(())
    })?;
    Ok(())
}
