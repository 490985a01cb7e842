//! Synchronous advantage actor-critic with λ-returns, entropy
//! regularization and the optional belief-grounding loss.

mod config;
mod log;
mod loss;
mod returns;
mod rollout;

pub use config::{default_total_steps, entropy_coefficient, EntropySchedule, TrainConfig};
pub use log::{EpisodeRecord, LogRecord, TrainingLog, UpdateRecord};
pub use loss::{a2c_losses, bgn_augment, LossGraph, LossTerms};
pub use returns::{lambda_returns, StepEnd};
pub use rollout::{collect_random, collect_segment, replay_segment, Rollout, SegmentVars, Workers};

use crate::agent::{build_agent, AgentError, AgentNets, AgentVariant};
use crate::env::{Domain, EnvError};
use crate::tensor::{clip_global_norm, load_checkpoint, save_checkpoint, CheckpointError, RmsProp, Tape, TensorError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("rollout has no belief targets or belief predictions")]
    MissingBeliefs,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("training log: {0}")]
    Log(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Metadata stored alongside checkpoint parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub env_steps: u64,
    pub updates: u64,
    pub config: TrainConfig,
}

/// Training state of one run.
pub struct Trainer {
    config: TrainConfig,
    domain: Arc<Domain>,
    nets: AgentNets,
    optimizer: RmsProp,
    workers: Workers,
    rng: ChaCha8Rng,
    updates: u64,
}

impl Trainer {
    /// Builds networks and environments. Every configuration error is
    /// reported here, before any environment step.
    pub fn new(config: &TrainConfig) -> Result<Self, TrainError> {
        let domain = Arc::new(Domain::resolve(&config.domain)?);
        let config = config.resolve(&domain)?;
        let mut init = ChaCha8Rng::seed_from_u64(config.seed);
        let nets = build_agent(config.variant, &domain, config.network, config.num_workers, &mut init);
        let seeds: Vec<u64> = (0..config.num_workers).map(|_| init.random()).collect();
        let gamma = config.discount.expect("resolved");
        let workers = Workers::new(&domain, &seeds, gamma, !config.sequential);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Trainer {
            optimizer: RmsProp::new(config.optimizer, &nets.params),
            config,
            domain,
            nets,
            workers,
            rng,
            updates: 0,
        })
    }

    /// The resolved configuration.
    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn nets(&self) -> &AgentNets {
        &self.nets
    }

    pub fn into_nets(self) -> AgentNets {
        self.nets
    }

    pub fn env_steps(&self) -> u64 {
        self.workers.env_steps()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn is_finished(&self) -> bool {
        self.env_steps() >= self.config.total_steps.expect("resolved")
    }

    /// Collects one segment and, for learning agents, applies one update.
    /// Returns the episode records followed by the update record (if due).
    pub fn step(&mut self) -> Result<Vec<LogRecord>, TrainError> {
        let len = self.config.segment_length;
        if self.config.variant.is_random() {
            let n = self.domain.num_actions();
            let eps = collect_random(&mut self.workers, n, len, &mut self.rng)?;
            return Ok(eps.into_iter().map(LogRecord::Episode).collect());
        }
        let beta_e = self.config.entropy.expect("resolved").at(self.env_steps());
        let gamma = self.config.discount.expect("resolved");
        let tape_params = &self.nets.params;
        let mut tape = Tape::new(tape_params);
        let placed = self.nets.place(&mut tape)?;
        let (rollout, episodes) = collect_segment(&mut tape, &self.nets, &placed, &mut self.workers, len, &mut self.rng)?;
        let returns = rollout.returns(gamma, self.config.lambda);
        let mut graph = a2c_losses(&mut tape, &rollout, &returns, self.config.critic_coef, beta_e)?;
        if self.config.variant.bgn() {
            graph = bgn_augment(&mut tape, graph, &rollout)?;
        }
        let losses = graph.terms(&tape);
        let mut grads = tape.backward(graph.total)?;
        drop(tape);
        let grad_norm = clip_global_norm(&mut grads, self.config.max_grad_norm);
        self.optimizer.step(&mut self.nets.params, &grads);
        self.nets.actor_hidden = rollout.actor_hidden;
        self.nets.critic_hidden = rollout.critic_hidden;
        self.updates += 1;
        let mut out: Vec<LogRecord> = episodes.into_iter().map(LogRecord::Episode).collect();
        if self.updates % self.config.update_log_interval == 0 {
            out.push(LogRecord::Update(UpdateRecord {
                update: self.updates,
                env_steps: self.env_steps(),
                losses,
                grad_norm,
                beta_e,
            }));
        }
        Ok(out)
    }

    /// Trains until the step budget, passing each record to `sink`.
    pub fn run(&mut self, mut sink: impl FnMut(&Trainer, &LogRecord) -> Result<(), TrainError>) -> Result<(), TrainError> {
        while !self.is_finished() {
            for r in self.step()? {
                sink(self, &r)?;
            }
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), TrainError> {
        let meta = CheckpointMeta {
            env_steps: self.env_steps(),
            updates: self.updates,
            config: self.config.clone(),
        };
        let meta = serde_json::to_value(meta).expect("meta serializes");
        save_checkpoint(path, &self.config.variant.to_string(), &self.domain.name, meta, &self.nets.params)?;
        Ok(())
    }
}

/// Trains in memory and returns the full log.
pub fn train(config: &TrainConfig) -> Result<TrainingLog, TrainError> {
    let mut trainer = Trainer::new(config)?;
    let mut log = TrainingLog::default();
    trainer.run(|_, r| {
        log.records.push(r.clone());
        Ok(())
    })?;
    Ok(log)
}

pub const LOG_FILE: &str = "log.jsonl";
pub const CONFIG_FILE: &str = "config.json";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// Trains into `dir`, writing the resolved config, the JSONL log, periodic
/// checkpoints `step-<n>.ckpt` and `final.ckpt`.
pub fn train_to_dir(config: &TrainConfig, dir: &Path) -> Result<Trainer, TrainError> {
    let mut trainer = Trainer::new(config)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cfg_path = dir.join(CONFIG_FILE);
    let text = serde_json::to_string_pretty(trainer.config()).expect("config serializes");
    std::fs::write(&cfg_path, text + "\n").map_err(io_err(&cfg_path))?;
    let log_path = dir.join(LOG_FILE);
    let file = std::fs::File::create(&log_path).map_err(io_err(&log_path))?;
    let mut out = BufWriter::new(file);
    let interval = trainer.config().checkpoint_interval;
    let mut next_ckpt = interval;
    while !trainer.is_finished() {
        for r in trainer.step()? {
            writeln!(out, "{}", r.to_json_line()).map_err(io_err(&log_path))?;
        }
        if let (Some(at), Some(every)) = (next_ckpt, interval) {
            if trainer.env_steps() >= at {
                out.flush().map_err(io_err(&log_path))?;
                trainer.save_checkpoint(&dir.join(format!("step-{at}.ckpt")))?;
                next_ckpt = Some(at + every);
            }
        }
        if trainer.updates() % 200 == 0 {
            out.flush().map_err(io_err(&log_path))?;
        }
    }
    out.flush().map_err(io_err(&log_path))?;
    if !trainer.config().variant.is_random() {
        trainer.save_checkpoint(&dir.join(FINAL_CHECKPOINT))?;
    }
    Ok(trainer)
}

/// Rebuilds an agent (with `num_workers` recurrent slots) from a
/// checkpoint written by [`Trainer::save_checkpoint`].
pub fn load_agent(path: &Path, num_workers: usize) -> Result<(AgentNets, Arc<Domain>, CheckpointMeta), TrainError> {
    let (header, params) = load_checkpoint(path)?;
    let meta: CheckpointMeta = serde_json::from_value(header.meta)
        .map_err(|e| TrainError::Config(format!("checkpoint metadata: {e}")))?;
    let domain = Arc::new(Domain::resolve(&meta.config.domain)?);
    let variant: AgentVariant = header
        .variant
        .parse()
        .map_err(|e: crate::agent::VariantParseError| TrainError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut nets = build_agent(variant, &domain, meta.config.network, num_workers, &mut rng);
    if nets.params.len() != params.len() {
        return Err(TrainError::Config("checkpoint does not match the agent layout".into()));
    }
    for id in params.ids() {
        let target = nets.params.find(params.name(id));
        match target {
            Some(t) if nets.params.get(t).dim() == params.get(id).dim() => {
                nets.params.get_mut(t).assign(params.get(id));
            }
            _ => {
                return Err(TrainError::Config(format!(
                    "checkpoint parameter `{}` does not match the agent layout",
                    params.name(id)
                )))
            }
        }
    }
    Ok((nets, domain, meta))
}

#[cfg(test)]
mod tests;
