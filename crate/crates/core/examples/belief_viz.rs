//! Trains a short Ah-Ch+BGN run on TwoBumps-1D, then exports true and
//! predicted beliefs for one episode as JSON.
//!
//! `cargo run --release --example belief_viz -- [steps] [out-dir]`

use bgn::bench::export_belief_comparison;
use bgn::trainer::{train_to_dir, TrainConfig, FINAL_CHECKPOINT};
use std::path::PathBuf;

fn main() -> anyhow::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(Ok(50_000), |s| s.parse())?;
    let out = PathBuf::from(std::env::args().nth(2).unwrap_or_else(|| "runs/example-belief-viz".into()));
    let mut config = TrainConfig {
        domain: "twobumps-1d".into(),
        total_steps: Some(steps),
        ..TrainConfig::default()
    };
    config.optimizer.epsilon = 1e-5;
    train_to_dir(&config, &out)?;
    let json = out.join("beliefs.json");
    let cmp = export_belief_comparison(&out.join(FINAL_CHECKPOINT), 123, 1, &json)?;
    for f in cmp.frames.iter().take(5) {
        println!("t={} KL(b || b̂) = {:.4} nats", f.t, f.kl);
    }
    println!("mean KL {:.4} nats over {} steps -> {}", cmp.mean_kl, cmp.frames.len(), json.display());
    Ok(())
}
