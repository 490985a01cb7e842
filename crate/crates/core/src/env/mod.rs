//! Episodic simulators with exact belief tracking.

mod encode;
pub mod robot;
mod toy;

pub use encode::{encode_input, Encoded, InputShape, InputSource, Percept};
pub use robot::{Outcome, RobotDomain, RobotKind, RobotParams};
pub use toy::{toy_model, TOY_LEFT, TOY_RIGHT, TOY_STATES};

use crate::belief::{belief_update, initial_belief, momdp_belief_update, Belief, BeliefError, MomdpBelief};
use crate::pomdp::{generate_hallway, parse_pomdp, ParseError, PomdpModel, RockSampleError, RockSampleSpec};
use crate::sampling::{sample_index, sample_sparse};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called after the episode ended")]
    StepAfterEnd,
    #[error("step called before reset")]
    NotReset,
    #[error("action {action} out of range for {num_actions} actions")]
    InvalidAction { action: usize, num_actions: usize },
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    RockSample(#[from] RockSampleError),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("domain config: {0}")]
    Config(String),
}

/// Built-in domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainId {
    Hallway,
    RockSample44,
    RockSample55,
    TopPlate,
    TwoBumps1D,
    TwoBumps2D,
    Toy,
}

impl DomainId {
    pub const ALL: [DomainId; 7] = [
        DomainId::Hallway,
        DomainId::RockSample44,
        DomainId::RockSample55,
        DomainId::TopPlate,
        DomainId::TwoBumps1D,
        DomainId::TwoBumps2D,
        DomainId::Toy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DomainId::Hallway => "hallway",
            DomainId::RockSample44 => "rocksample-4-4",
            DomainId::RockSample55 => "rocksample-5-5",
            DomainId::TopPlate => "topplate",
            DomainId::TwoBumps1D => "twobumps-1d",
            DomainId::TwoBumps2D => "twobumps-2d",
            DomainId::Toy => "toy",
        }
    }

    pub fn is_rocksample(self) -> bool {
        matches!(self, DomainId::RockSample44 | DomainId::RockSample55)
    }

    pub fn is_robot(self) -> bool {
        matches!(self, DomainId::TopPlate | DomainId::TwoBumps1D | DomainId::TwoBumps2D)
    }

    /// Published set sizes `(|X| or |S|, |Y|, |A|, |Ω|, γ, max length)`.
    pub fn reference_sizes(self) -> Option<ReferenceSizes> {
        let r = |s, y, a, o, gamma, len| {
            Some(ReferenceSizes {
                states: s,
                hidden: y,
                actions: a,
                observations: o,
                discount: gamma,
                max_episode_length: len,
            })
        };
        match self {
            DomainId::Hallway => r(57, None, 5, 21, 0.95, 100),
            DomainId::RockSample44 => r(257, None, 9, 2, 0.95, 100),
            DomainId::RockSample55 => r(807, None, 10, 2, 0.95, 100),
            DomainId::TopPlate => r(21, Some(8), 3, 21, 0.99, 50),
            DomainId::TwoBumps1D => r(45, Some(225), 4, 25, 0.99, 100),
            DomainId::TwoBumps2D => r(48, Some(256), 5, 48, 0.99, 100),
            DomainId::Toy => None,
        }
    }
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['_', '[', ']', ','], "-");
        let key = key.trim_end_matches('-');
        DomainId::ALL
            .into_iter()
            .find(|d| d.name() == key)
            .ok_or_else(|| EnvError::UnknownDomain(s.to_string()))
    }
}

/// Published reference sizes. For robot domains `states` is `|X|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceSizes {
    pub states: usize,
    pub hidden: Option<usize>,
    pub actions: usize,
    pub observations: usize,
    pub discount: f64,
    pub max_episode_length: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LengthOnly {
    max_episode_length: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RockSampleConfig {
    n: usize,
    rocks: Vec<(usize, usize)>,
    start: (usize, usize),
    half_efficiency_distance: f64,
    discount: f64,
    max_episode_length: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuiltinConfig {
    hallway: LengthOnly,
    rocksample_4_4: RockSampleConfig,
    rocksample_5_5: RockSampleConfig,
    topplate: RobotParams,
    twobumps_1d: RobotParams,
    twobumps_2d: RobotParams,
    toy: LengthOnly,
}

const BUILTIN_CONFIG: &str = include_str!("../../data/domains.toml");

fn builtin_config() -> &'static BuiltinConfig {
    static CONFIG: OnceLock<BuiltinConfig> = OnceLock::new();
    CONFIG.get_or_init(|| toml::from_str(BUILTIN_CONFIG).expect("embedded domains.toml is valid"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Tabular(PomdpModel),
    Robot(RobotDomain),
}

/// A simulator definition shared by every environment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub id: Option<DomainId>,
    pub name: String,
    pub max_episode_length: usize,
    pub kind: DomainKind,
}

/// Output of `describe`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDescription {
    pub domain: String,
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub s: usize,
    pub a: usize,
    pub omega: usize,
    pub gamma: f64,
    pub max_episode_length: usize,
    pub deviations: Vec<String>,
}

impl Domain {
    pub fn builtin(id: DomainId) -> Result<Domain, EnvError> {
        let cfg = builtin_config();
        let rock = |c: &RockSampleConfig| -> Result<(PomdpModel, usize), EnvError> {
            let spec = RockSampleSpec {
                n: c.n,
                rocks: c.rocks.clone(),
                start: c.start,
                half_efficiency_distance: c.half_efficiency_distance,
                discount: c.discount,
            };
            Ok((spec.build()?, c.max_episode_length))
        };
        let (kind, len) = match id {
            DomainId::Hallway => (DomainKind::Tabular(generate_hallway()), cfg.hallway.max_episode_length),
            DomainId::RockSample44 => {
                let (m, len) = rock(&cfg.rocksample_4_4)?;
                (DomainKind::Tabular(m), len)
            }
            DomainId::RockSample55 => {
                let (m, len) = rock(&cfg.rocksample_5_5)?;
                (DomainKind::Tabular(m), len)
            }
            DomainId::TopPlate => robot(RobotKind::TopPlate, &cfg.topplate),
            DomainId::TwoBumps1D => robot(RobotKind::TwoBumps1D, &cfg.twobumps_1d),
            DomainId::TwoBumps2D => robot(RobotKind::TwoBumps2D, &cfg.twobumps_2d),
            DomainId::Toy => (DomainKind::Tabular(toy_model()), cfg.toy.max_episode_length),
        };
        Ok(Domain {
            id: Some(id),
            name: id.name().to_string(),
            max_episode_length: len,
            kind,
        })
    }

    /// Loads a `.POMDP` file as a tabular domain.
    pub fn from_pomdp_file(path: &Path, max_episode_length: usize) -> Result<Domain, EnvError> {
        let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Domain {
            id: None,
            name: format!("file:{}", path.display()),
            max_episode_length,
            kind: DomainKind::Tabular(parse_pomdp(&text)?),
        })
    }

    /// Resolves a built-in name or `file:<path>` (100-step episodes).
    pub fn resolve(name: &str) -> Result<Domain, EnvError> {
        match name.strip_prefix("file:") {
            Some(path) => Domain::from_pomdp_file(Path::new(path), 100),
            None => Domain::builtin(name.parse()?),
        }
    }

    pub fn is_robot(&self) -> bool {
        matches!(self.kind, DomainKind::Robot(_))
    }

    pub fn is_rocksample(&self) -> bool {
        self.id.is_some_and(DomainId::is_rocksample)
    }

    pub fn num_actions(&self) -> usize {
        match &self.kind {
            DomainKind::Tabular(m) => m.num_actions(),
            DomainKind::Robot(r) => r.num_actions(),
        }
    }

    pub fn discount(&self) -> f64 {
        match &self.kind {
            DomainKind::Tabular(m) => m.discount,
            DomainKind::Robot(r) => r.params.discount,
        }
    }

    /// Length of the belief target: `|S|` or `|Y|`.
    pub fn belief_size(&self) -> usize {
        match &self.kind {
            DomainKind::Tabular(m) => m.num_states(),
            DomainKind::Robot(r) => r.num_y(),
        }
    }

    /// Number of distinct agent observations (`|Ω|`, or `|X|` for robots).
    pub fn num_observations(&self) -> usize {
        match &self.kind {
            DomainKind::Tabular(m) => m.num_observations(),
            DomainKind::Robot(r) => r.num_x(),
        }
    }

    pub fn action_name(&self, a: usize) -> String {
        match &self.kind {
            DomainKind::Tabular(m) => m.action_label(a),
            DomainKind::Robot(r) => r.action_names()[a].to_string(),
        }
    }

    pub fn describe(&self) -> DomainDescription {
        let (x, y, s, omega) = match &self.kind {
            DomainKind::Tabular(m) => (None, None, m.num_states(), m.num_observations()),
            DomainKind::Robot(r) => (Some(r.num_x()), Some(r.num_y()), r.num_x() * r.num_y(), r.num_x()),
        };
        let mut d = DomainDescription {
            domain: self.name.clone(),
            x,
            y,
            s,
            a: self.num_actions(),
            omega,
            gamma: self.discount(),
            max_episode_length: self.max_episode_length,
            deviations: Vec::new(),
        };
        if let Some(r) = self.id.and_then(DomainId::reference_sizes) {
            let mut check = |label: &str, ours: usize, theirs: usize| {
                if ours != theirs {
                    d.deviations.push(format!("{label} = {ours} (reference {theirs})"));
                }
            };
            match (x, y) {
                (Some(x), Some(y)) => {
                    check("|X|", x, r.states);
                    check("|Y|", y, r.hidden.unwrap_or(y));
                }
                _ => check("|S|", s, r.states),
            }
            check("|A|", d.a, r.actions);
            check("|Ω|", omega, r.observations);
            check("max episode length", d.max_episode_length, r.max_episode_length);
            if d.gamma != r.discount {
                d.deviations.push(format!("γ = {} (reference {})", d.gamma, r.discount));
            }
        }
        d
    }

    /// Shape of the encoded network input for `source`.
    pub fn input_shape(&self, source: InputSource) -> InputShape {
        encode::input_shape(self, source)
    }
}

fn robot(kind: RobotKind, params: &RobotParams) -> (DomainKind, usize) {
    (
        DomainKind::Robot(RobotDomain::new(kind, params.clone())),
        params.max_episode_length,
    )
}

/// One transition (or the initial record after `reset`).
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// Agent observation: `o` for tabular domains (the reserved index `|Ω|`
    /// after reset) and `x'` for robot domains.
    pub observation: usize,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub success: bool,
    /// Flat state index (`x * |Y| + y` for robot domains).
    pub state: usize,
    /// Exact belief over `S` (tabular) or `Y` (robot).
    pub belief: Belief,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tracker {
    Flat(Belief),
    Factored(MomdpBelief),
}

/// A running episode of a [`Domain`] with its own rng stream.
#[derive(Debug, Clone)]
pub struct Env {
    domain: Arc<Domain>,
    rng: ChaCha8Rng,
    /// Tabular state, or the hidden `y` for robot domains.
    hidden: usize,
    x: usize,
    memory: u8,
    tracker: Option<Tracker>,
    observation: usize,
    prev_action: Option<usize>,
    steps: usize,
    done: bool,
}

impl Env {
    pub fn new(domain: Arc<Domain>, seed: u64) -> Self {
        Env {
            domain,
            rng: ChaCha8Rng::seed_from_u64(seed),
            hidden: 0,
            x: 0,
            memory: 0,
            tracker: None,
            observation: 0,
            prev_action: None,
            steps: 0,
            done: false,
        }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn prev_action(&self) -> Option<usize> {
        self.prev_action
    }

    /// Current belief target.
    pub fn belief(&self) -> &Belief {
        match self.tracker.as_ref().expect("reset before use") {
            Tracker::Flat(b) => b,
            Tracker::Factored(b) => &b.hidden,
        }
    }

    pub fn state(&self) -> usize {
        match &self.domain.kind {
            DomainKind::Tabular(_) => self.hidden,
            DomainKind::Robot(r) => self.x * r.num_y() + self.hidden,
        }
    }

    pub fn percept(&self) -> Percept<'_> {
        Percept {
            observation: self.observation,
            prev_action: self.prev_action,
            state: self.hidden,
            x: self.x,
            memory: self.memory,
            belief: self.belief(),
        }
    }

    pub fn encode(&self, source: InputSource) -> Encoded {
        encode_input(&self.domain, &self.percept(), source)
    }

    fn record(&self, reward: f64, terminated: bool, truncated: bool, success: bool) -> StepResult {
        StepResult {
            observation: self.observation,
            reward,
            terminated,
            truncated,
            success,
            state: self.state(),
            belief: self.belief().clone(),
        }
    }

    pub fn reset(&mut self) -> StepResult {
        let domain = Arc::clone(&self.domain);
        match &domain.kind {
            DomainKind::Tabular(m) => {
                self.hidden = sample_index(&m.start, &mut self.rng);
                self.observation = m.num_observations();
                self.tracker = Some(Tracker::Flat(initial_belief(m)));
            }
            DomainKind::Robot(r) => {
                let model = r.model();
                let joint = sample_index(&model.start, &mut self.rng);
                let ny = model.num_y();
                self.x = joint / ny;
                self.hidden = joint % ny;
                self.memory = r.contact_bits(self.x);
                self.observation = self.x;
                let b = MomdpBelief::initial(model, self.x).expect("sampled x has start mass");
                self.tracker = Some(Tracker::Factored(b));
            }
        }
        self.prev_action = None;
        self.steps = 0;
        self.done = false;
        self.record(0.0, false, false, false)
    }

    pub fn step(&mut self, a: usize) -> Result<StepResult, EnvError> {
        let tracker = self.tracker.take().ok_or(EnvError::NotReset)?;
        if self.done {
            self.tracker = Some(tracker);
            return Err(EnvError::StepAfterEnd);
        }
        let num_actions = self.domain.num_actions();
        if a >= num_actions {
            self.tracker = Some(tracker);
            return Err(EnvError::InvalidAction { action: a, num_actions });
        }
        let domain = Arc::clone(&self.domain);
        let (reward, terminated, success, tracker) = match (&domain.kind, tracker) {
            (DomainKind::Tabular(m), Tracker::Flat(b)) => {
                let s = self.hidden;
                let next = sample_sparse(m.successors(s, a), &mut self.rng);
                let o = sample_index(m.observation_row(next, a), &mut self.rng);
                let reward = m.reward(s, a, next, o);
                let terminated = m.is_terminal(s, a, next);
                self.hidden = next;
                self.observation = o;
                let b = belief_update(m, &b, a, o)?;
                (reward, terminated, terminated && reward > 0.0, Tracker::Flat(b))
            }
            (DomainKind::Robot(r), Tracker::Factored(b)) => {
                let out = r.outcome(self.x, self.hidden, a);
                self.memory |= r.contact_bits(out.x);
                let success = out.terminal && r.is_success(&out, self.memory);
                self.x = out.x;
                self.hidden = out.y;
                self.observation = out.x;
                let b = momdp_belief_update(r.model(), &b, a, out.x, 0)?;
                (if success { 1.0 } else { 0.0 }, out.terminal, success, Tracker::Factored(b))
            }
            _ => unreachable!("tracker matches domain kind"),
        };
        self.tracker = Some(tracker);
        self.prev_action = Some(a);
        self.steps += 1;
        let truncated = !terminated && self.steps >= self.domain.max_episode_length;
        self.done = terminated || truncated;
        Ok(self.record(reward, terminated, truncated, success))
    }
}
