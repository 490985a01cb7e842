//! Runs a small variant × seed grid on the toy domain and tabulates the
//! final performance.
//!
//! `cargo run --release --example sweep_and_summarize -- [out-dir]`

use bgn::agent::AgentVariant;
use bgn::bench::{run_experiment, summarize_dir, ExistingRuns, ExperimentSpec};
use bgn::trainer::TrainConfig;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "runs/example-sweep".into());
    let mut base = TrainConfig {
        total_steps: Some(20_000),
        sequential: true,
        ..TrainConfig::default()
    };
    base.optimizer.epsilon = 1e-5;
    let spec = ExperimentSpec {
        domain: "toy".into(),
        variants: vec![AgentVariant::Random, AgentVariant::AH_CH, AgentVariant::AH_CH_BGN],
        seeds: vec![0, 1],
        base,
        out_dir: out.clone().into(),
    };
    let report = run_experiment(&spec, ExistingRuns::Resume)?;
    println!("trained {} runs, kept {} finished runs", report.trained.len(), report.skipped.len());
    let table = summarize_dir(out.as_ref())?;
    print!("{}", table.to_csv());
    Ok(())
}
