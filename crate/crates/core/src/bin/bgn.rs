use anyhow::{bail, Context, Result};
use bgn::agent::AgentVariant;
use bgn::bench::{self, ExistingRuns, ExperimentSpec};
use bgn::env::Domain;
use bgn::trainer::{train_to_dir, TrainConfig, LOG_FILE};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bgn", about = "Belief-grounded actor-critic experiments on POMDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in domain (hallway, rocksample-4-4, topplate, twobumps-1d, ...)
    /// or `file:<path>` for a POMDP file.
    #[arg(long)]
    domain: Option<String>,
    /// Environment-step budget.
    #[arg(long)]
    steps: Option<u64>,
    /// TOML file of training-config overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Step environments on one thread (bit-deterministic).
    #[arg(long)]
    sequential: bool,
    /// Replace existing results.
    #[arg(long)]
    overwrite: bool,
}

impl Common {
    fn config(&self) -> Result<TrainConfig> {
        let mut c = match &self.config {
            Some(p) => TrainConfig::from_toml_file(p)?,
            None => TrainConfig::default(),
        };
        if let Some(d) = &self.domain {
            c.domain = d.clone();
        }
        if let Some(s) = self.steps {
            c.total_steps = Some(s);
        }
        c.sequential |= self.sequential;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        variant: Option<AgentVariant>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train every variant for every seed.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated variants.
        #[arg(long, value_delimiter = ',', required = true)]
        variant: Vec<AgentVariant>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        /// Restart unfinished runs instead of failing on them.
        #[arg(long)]
        resume: bool,
    },
    /// Tabulate final performance of finished runs below a directory.
    Summarize {
        #[arg(long)]
        out: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Export true and predicted beliefs of a BGN checkpoint as JSON.
    BeliefViz {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a domain's sizes and any deviation from the reference sizes.
    DescribeDomain {
        #[arg(long)]
        domain: String,
    },
    /// Run the built-in oracle and invariant checks.
    Check,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { common, variant, seed } => {
            let mut config = common.config()?;
            if let Some(v) = variant {
                config.variant = v;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            if common.out.join(LOG_FILE).exists() && !common.overwrite {
                bail!("{} already holds a run; pass --overwrite to replace it", common.out.display());
            }
            for o in config.overrides() {
                eprintln!("override: {o}");
            }
            let trainer = train_to_dir(&config, &common.out)?;
            println!("trained {} env steps in {} updates -> {}", trainer.env_steps(), trainer.updates(), common.out.display());
        }
        Command::Sweep {
            common,
            variant,
            seeds,
            resume,
        } => {
            let base = common.config()?;
            for o in base.overrides() {
                eprintln!("override: {o}");
            }
            let spec = ExperimentSpec {
                domain: base.domain.clone(),
                variants: variant,
                seeds,
                base,
                out_dir: common.out.clone(),
            };
            let existing = match (common.overwrite, resume) {
                (true, _) => ExistingRuns::Overwrite,
                (false, true) => ExistingRuns::Resume,
                (false, false) => ExistingRuns::Keep,
            };
            let report = bench::run_experiment(&spec, existing)?;
            println!("trained {} runs, skipped {} finished runs", report.trained.len(), report.skipped.len());
        }
        Command::Summarize { out, csv } => {
            let table = bench::summarize_dir(&out)?;
            println!(
                "{:<16} {:<12} {:>5} {:>16} {:>16} {:>16}",
                "domain", "variant", "seeds", "return", "success", "normalized"
            );
            for r in &table.rows {
                let norm = r.normalized.map_or("-".to_string(), |(m, s)| format!("{m:.3} ± {s:.3}"));
                println!(
                    "{:<16} {:<12} {:>5} {:>16} {:>16} {:>16}",
                    r.domain,
                    r.variant,
                    r.seeds.len(),
                    format!("{:.3} ± {:.3}", r.return_mean, r.return_std),
                    format!("{:.3} ± {:.3}", r.success_mean, r.success_std),
                    norm
                );
            }
            for m in &table.missing {
                println!("missing: {m}");
            }
            if let Some(path) = csv {
                std::fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::BeliefViz {
            checkpoint,
            seed,
            episodes,
            out,
        } => {
            let cmp = bench::export_belief_comparison(&checkpoint, seed, episodes, &out)?;
            println!(
                "{} frames on a {}x{} grid, mean KL(b || b̂) = {:.4} nats -> {}",
                cmp.frames.len(),
                cmp.grid.0,
                cmp.grid.1,
                cmp.mean_kl,
                out.display()
            );
        }
        Command::DescribeDomain { domain } => {
            let d = Domain::resolve(&domain)?.describe();
            println!("{}", serde_json::to_string_pretty(&d)?);
            for dev in &d.deviations {
                println!("deviation: {dev}");
            }
        }
        Command::Check => {
            let mut failed = 0;
            for c in bench::checks::run_all() {
                println!("{} {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                bail!("{failed} checks failed");
            }
        }
    }
    Ok(())
}
