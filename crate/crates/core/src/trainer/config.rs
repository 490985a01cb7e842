use super::TrainError;
use crate::agent::{AgentVariant, NetworkConfig};
use crate::env::{Domain, DomainId};
use crate::tensor::RmsPropConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

/// Entropy-regularization coefficient as a function of the global
/// environment-step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropySchedule {
    Constant { value: f64 },
    /// `initial · base^(t / horizon)`.
    Exponential { initial: f64, base: f64, horizon: f64 },
}

impl EntropySchedule {
    /// Decaying schedule on RockSample, constant 0.01 elsewhere.
    pub fn for_domain(rocksample: bool) -> Self {
        if rocksample {
            EntropySchedule::Exponential {
                initial: 2.0,
                base: 0.1,
                horizon: 3_000_000.0,
            }
        } else {
            EntropySchedule::Constant { value: 0.01 }
        }
    }

    pub fn at(&self, t: u64) -> f64 {
        match *self {
            EntropySchedule::Constant { value } => value,
            EntropySchedule::Exponential { initial, base, horizon } => initial * base.powf(t as f64 / horizon),
        }
    }
}

/// Default `β_e` for a built-in domain after `t` environment steps summed
/// over all workers.
pub fn entropy_coefficient(t: u64, domain: DomainId) -> f64 {
    EntropySchedule::for_domain(domain.is_rocksample()).at(t)
}

/// Environment-step budget used when the config does not set one.
pub fn default_total_steps(domain: &Domain) -> u64 {
    match domain.id {
        Some(DomainId::Toy) => 50_000,
        Some(DomainId::RockSample44 | DomainId::RockSample55) => 10_000_000,
        _ => 2_000_000,
    }
}

/// Training hyperparameters. Unset optional fields take per-domain defaults
/// in [`TrainConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Built-in domain name or `file:<path>` for a POMDP file.
    pub domain: String,
    pub variant: AgentVariant,
    pub seed: u64,
    pub total_steps: Option<u64>,
    pub num_workers: usize,
    pub segment_length: usize,
    pub discount: Option<f64>,
    pub lambda: f64,
    pub critic_coef: f64,
    pub entropy: Option<EntropySchedule>,
    pub max_grad_norm: f64,
    pub optimizer: RmsPropConfig,
    pub network: NetworkConfig,
    /// Write an update record every this many updates.
    pub update_log_interval: u64,
    /// Save an intermediate checkpoint every this many environment steps.
    pub checkpoint_interval: Option<u64>,
    /// Step environments on the calling thread only.
    pub sequential: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            domain: DomainId::Hallway.name().to_string(),
            variant: AgentVariant::AH_CH_BGN,
            seed: 0,
            total_steps: None,
            num_workers: 16,
            segment_length: 5,
            discount: None,
            lambda: 0.95,
            critic_coef: 0.5,
            entropy: None,
            max_grad_norm: 0.5,
            optimizer: RmsPropConfig::default(),
            network: NetworkConfig::default(),
            update_log_interval: 1,
            checkpoint_interval: None,
            sequential: false,
        }
    }
}

impl TrainConfig {
    /// Reads overrides from a TOML file on top of the defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TrainError> {
        toml::from_str(text).map_err(|e| TrainError::Config(e.message().to_string()))
    }

    /// Fills per-domain defaults and validates the result.
    pub fn resolve(&self, domain: &Domain) -> Result<TrainConfig, TrainError> {
        let mut c = self.clone();
        c.total_steps.get_or_insert(default_total_steps(domain));
        c.discount.get_or_insert(domain.discount());
        c.entropy.get_or_insert(EntropySchedule::for_domain(domain.is_rocksample()));
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::Config(msg.to_string()));
        if self.num_workers == 0 {
            return bad("num_workers must be at least 1");
        }
        if self.segment_length == 0 {
            return bad("segment_length must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if let Some(g) = self.discount {
            if !(g > 0.0 && g <= 1.0) {
                return bad("discount must lie in (0, 1]");
            }
        }
        if !(self.critic_coef >= 0.0) {
            return bad("critic_coef must be non-negative");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0) || !(0.0..1.0).contains(&o.decay) || !(o.epsilon >= 0.0) {
            return bad("optimizer needs learning_rate > 0, decay in [0, 1) and epsilon >= 0");
        }
        if self.network.hidden == 0 || self.network.embedding == 0 {
            return bad("network widths must be positive");
        }
        if self.update_log_interval == 0 || self.checkpoint_interval == Some(0) {
            return bad("intervals must be positive");
        }
        Ok(())
    }

    /// Dotted keys whose values differ from the defaults, as `key = value`.
    pub fn overrides(&self) -> Vec<String> {
        let ours = serde_json::to_value(self).expect("config serializes");
        let base = serde_json::to_value(TrainConfig::default()).expect("config serializes");
        let mut out = Vec::new();
        diff("", &ours, &base, &mut out);
        out
    }
}

fn diff(prefix: &str, ours: &Value, base: &Value, out: &mut Vec<String>) {
    match (ours, base) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                diff(&key, v, b.get(k).unwrap_or(&Value::Null), out);
            }
        }
        _ if ours != base => out.push(format!("{prefix} = {ours}")),
        _ => {}
    }
}
