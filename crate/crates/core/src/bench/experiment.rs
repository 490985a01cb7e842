use super::{io_err, BenchError};
use crate::agent::AgentVariant;
use crate::env::Domain;
use crate::trainer::{train_to_dir, TrainConfig};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Written into a run directory once training finished.
pub const DONE_FILE: &str = "done.json";

/// A grid of (variant, seed) runs on one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub domain: String,
    pub variants: Vec<AgentVariant>,
    pub seeds: Vec<u64>,
    /// Settings shared by every run; its domain, variant and seed are
    /// replaced per run.
    pub base: TrainConfig,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.variants.is_empty() || self.seeds.is_empty() {
            return Err(BenchError::Spec("need at least one variant and one seed".into()));
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(BenchError::Spec("seeds must be distinct".into()));
        }
        let variants: HashSet<_> = self.variants.iter().collect();
        if variants.len() != self.variants.len() {
            return Err(BenchError::Spec("variants must be distinct".into()));
        }
        Domain::resolve(&self.domain).map_err(|e| BenchError::Spec(e.to_string()))?;
        for v in &self.variants {
            self.run_config(*v, self.seeds[0]).validate().map_err(|e| BenchError::Spec(format!("{v}: {e}")))?;
        }
        Ok(())
    }

    pub fn run_config(&self, variant: AgentVariant, seed: u64) -> TrainConfig {
        TrainConfig {
            domain: self.domain.clone(),
            variant,
            seed,
            ..self.base.clone()
        }
    }

    /// `<out>/<variant>/seed-<seed>`.
    pub fn run_dir(&self, variant: AgentVariant, seed: u64) -> PathBuf {
        self.out_dir.join(variant.to_string()).join(format!("seed-{seed}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub variant: AgentVariant,
    pub seed: u64,
    /// Relative to the experiment directory.
    pub dir: PathBuf,
    /// Fully resolved training config.
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub runs: Vec<ManifestRun>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), BenchError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(io_err(path))
    }
}

/// What to do with run directories that already exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExistingRuns {
    /// Skip finished runs; fail on unfinished ones.
    #[default]
    Keep,
    /// Skip finished runs; restart unfinished ones from scratch.
    Resume,
    /// Retrain everything.
    Overwrite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub manifest: Manifest,
    pub trained: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DoneMarker {
    env_steps: u64,
    updates: u64,
}

/// Trains every (variant, seed) pair into its own directory and writes the
/// manifest.
pub fn run_experiment(spec: &ExperimentSpec, existing: ExistingRuns) -> Result<ExperimentReport, BenchError> {
    spec.validate()?;
    let domain = Domain::resolve(&spec.domain).map_err(|e| BenchError::Spec(e.to_string()))?;
    std::fs::create_dir_all(&spec.out_dir).map_err(io_err(&spec.out_dir))?;
    let mut runs = Vec::new();
    for &variant in &spec.variants {
        for &seed in &spec.seeds {
            let config = spec.run_config(variant, seed).resolve(&domain)?;
            let dir = spec.run_dir(variant, seed);
            runs.push(ManifestRun {
                variant,
                seed,
                dir: dir.strip_prefix(&spec.out_dir).expect("run dirs nest in out_dir").to_path_buf(),
                config,
            });
        }
    }
    let manifest = Manifest {
        spec: spec.clone(),
        runs,
    };
    manifest.write(&spec.out_dir.join(MANIFEST_FILE))?;

    let (mut trained, mut skipped) = (Vec::new(), Vec::new());
    for run in &manifest.runs {
        let dir = spec.out_dir.join(&run.dir);
        let done = dir.join(DONE_FILE).exists();
        let started = dir.exists();
        match existing {
            ExistingRuns::Keep | ExistingRuns::Resume if done => {
                skipped.push(dir);
                continue;
            }
            ExistingRuns::Keep if started => return Err(BenchError::PartialRun(dir)),
            _ => {}
        }
        if started {
            std::fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let trainer = train_to_dir(&run.config, &dir)?;
        let marker = DoneMarker {
            env_steps: trainer.env_steps(),
            updates: trainer.updates(),
        };
        let path = dir.join(DONE_FILE);
        std::fs::write(&path, serde_json::to_string(&marker).expect("marker serializes")).map_err(io_err(&path))?;
        trained.push(dir);
    }
    Ok(ExperimentReport {
        manifest,
        trained,
        skipped,
    })
}
