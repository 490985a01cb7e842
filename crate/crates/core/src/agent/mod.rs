//! Actor and critic networks for every input variant.
//!
//! Recurrent networks (history input) are
//! `front → GRU(H) → FC(H) + tanh → heads`, where the front is a pair of
//! 128-wide embeddings of `(observation, previous action)` for tabular
//! domains and the normalized feature vector for robot domains.
//! Feedforward networks (belief or state input) are
//! `front → FC(H) + tanh → FC(H) + tanh → heads`. The actor head is a softmax
//! over actions, the critic head a linear scalar, and the optional belief
//! head a softmax over the belief support.

mod variant;

pub use variant::{AgentVariant, VariantParseError};

use crate::env::{Domain, Encoded, InputShape, InputSource};
use crate::sampling::sample_index;
use crate::tensor::{init_embedding, init_uniform_fan_in, GruVars, Matrix, ParamId, ParamSet, Tape, TensorError, Var};
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("input does not match the network's encoding: {0}")]
    EncodingMismatch(String),
    #[error("the random agent has no networks")]
    NoNetworks,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Width of the GRU state and fully connected layers.
    pub hidden: usize,
    /// Width of each embedding table.
    pub embedding: usize,
    /// Multiplier applied to the initial weights of every output head.
    pub head_init_scale: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            hidden: 256,
            embedding: 128,
            head_init_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Actor,
    Critic,
}

impl Role {
    fn prefix(self) -> &'static str {
        match self {
            Role::Actor => "actor",
            Role::Critic => "critic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Front {
    Embed(Vec<ParamId>),
    Dense(usize),
}

/// Parameter handles and wiring of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetLayout {
    pub role: Role,
    pub source: InputSource,
    front: Front,
    gru: Option<[ParamId; 4]>,
    fc: Vec<(ParamId, ParamId)>,
    head: (ParamId, ParamId),
    belief_head: Option<(ParamId, ParamId)>,
    pub hidden: usize,
}

impl NetLayout {
    pub fn is_recurrent(&self) -> bool {
        self.gru.is_some()
    }

    pub fn has_belief_head(&self) -> bool {
        self.belief_head.is_some()
    }

    /// Every parameter this network reads.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        if let Front::Embed(tables) = &self.front {
            ids.extend(tables);
        }
        if let Some(g) = self.gru {
            ids.extend(g);
        }
        for &(w, b) in &self.fc {
            ids.extend([w, b]);
        }
        ids.extend([self.head.0, self.head.1]);
        if let Some((w, b)) = self.belief_head {
            ids.extend([w, b]);
        }
        ids
    }

    fn place(&self, tape: &mut Tape) -> PlacedNet {
        PlacedNet {
            front: match &self.front {
                Front::Embed(tables) => Some(tables.iter().map(|&t| tape.param(t)).collect()),
                Front::Dense(_) => None,
            },
            gru: self.gru.map(|[w, u, b, bhn]| GruVars {
                input: tape.param(w),
                recurrent: tape.param(u),
                input_bias: tape.param(b),
                hidden_bias: tape.param(bhn),
            }),
            fc: self.fc.iter().map(|&(w, b)| (tape.param(w), tape.param(b))).collect(),
            head: (tape.param(self.head.0), tape.param(self.head.1)),
            belief_head: self.belief_head.map(|(w, b)| (tape.param(w), tape.param(b))),
        }
    }
}

/// A network's parameters as tape variables.
#[derive(Debug, Clone)]
pub struct PlacedNet {
    front: Option<Vec<Var>>,
    gru: Option<GruVars>,
    fc: Vec<(Var, Var)>,
    head: (Var, Var),
    belief_head: Option<(Var, Var)>,
}

/// Outputs of one batched network step.
#[derive(Debug, Clone, Copy)]
pub struct NetOutput {
    /// Policy probabilities (`n × |A|`) or values (`n × 1`).
    pub head: Var,
    pub belief: Option<Var>,
    /// New recurrent state (`n × H`) for recurrent networks.
    pub hidden: Option<Var>,
}

/// Actor and critic parameters plus per-worker recurrent state.
#[derive(Debug, Clone)]
pub struct AgentNets {
    pub variant: AgentVariant,
    pub config: NetworkConfig,
    pub params: ParamSet,
    pub actor: Option<NetLayout>,
    pub critic: Option<NetLayout>,
    pub num_actions: usize,
    pub belief_size: usize,
    /// `workers × H` actor state (empty for feedforward actors).
    pub actor_hidden: Matrix,
    pub critic_hidden: Matrix,
}

fn linear<R: Rng + ?Sized>(
    params: &mut ParamSet,
    name: &str,
    rows: usize,
    fan_in: usize,
    scale: f64,
    rng: &mut R,
) -> (ParamId, ParamId) {
    let w = params.add(format!("{name}/w"), init_uniform_fan_in(rows, fan_in, rng) * scale);
    let b = params.add(format!("{name}/b"), Array2::zeros((1, rows)));
    (w, b)
}

#[allow(clippy::too_many_arguments)]
fn build_net<R: Rng + ?Sized>(
    params: &mut ParamSet,
    role: Role,
    source: InputSource,
    shape: InputShape,
    outputs: usize,
    belief: Option<usize>,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> NetLayout {
    let p = role.prefix();
    let h = cfg.hidden;
    let (front, width) = match shape {
        InputShape::Tokens(vocab) => {
            let names: &[&str] = if vocab.len() == 2 { &["observation", "action"] } else { &["state"] };
            let tables = vocab
                .iter()
                .zip(names)
                .map(|(&v, name)| params.add(format!("{p}/embed_{name}"), init_embedding(v, cfg.embedding, rng)))
                .collect::<Vec<_>>();
            let width = tables.len() * cfg.embedding;
            (Front::Embed(tables), width)
        }
        InputShape::Vector(d) => (Front::Dense(d), d),
    };
    let (gru, fc) = if source == InputSource::History {
        let gru = [
            params.add(format!("{p}/gru/w"), init_uniform_fan_in(3 * h, width, rng)),
            params.add(format!("{p}/gru/u"), init_uniform_fan_in(3 * h, h, rng)),
            params.add(format!("{p}/gru/b"), Array2::zeros((1, 3 * h))),
            params.add(format!("{p}/gru/b_hn"), Array2::zeros((1, h))),
        ];
        (Some(gru), vec![linear(params, &format!("{p}/fc1"), h, h, 1.0, rng)])
    } else {
        let fc1 = linear(params, &format!("{p}/fc1"), h, width, 1.0, rng);
        let fc2 = linear(params, &format!("{p}/fc2"), h, h, 1.0, rng);
        (None, vec![fc1, fc2])
    };
    let head_name = if role == Role::Actor { "policy" } else { "value" };
    let head = linear(params, &format!("{p}/{head_name}"), outputs, h, cfg.head_init_scale, rng);
    let belief_head = belief.map(|n| linear(params, &format!("{p}/belief"), n, h, cfg.head_init_scale, rng));
    NetLayout {
        role,
        source,
        front,
        gru,
        fc,
        head,
        belief_head,
        hidden: h,
    }
}

/// Builds actor and critic networks for `variant` on `domain`.
pub fn build_agent<R: Rng + ?Sized>(
    variant: AgentVariant,
    domain: &Domain,
    config: NetworkConfig,
    num_workers: usize,
    rng: &mut R,
) -> AgentNets {
    let num_actions = domain.num_actions();
    let belief_size = domain.belief_size();
    let mut params = ParamSet::new();
    let (actor, critic) = match variant.inputs() {
        None => (None, None),
        Some((a, c)) => {
            let belief = variant.bgn().then_some(belief_size);
            let actor = build_net(&mut params, Role::Actor, a, domain.input_shape(a), num_actions, belief, &config, rng);
            let critic = build_net(&mut params, Role::Critic, c, domain.input_shape(c), 1, belief, &config, rng);
            (Some(actor), Some(critic))
        }
    };
    let width = |n: &Option<NetLayout>| n.as_ref().filter(|n| n.is_recurrent()).map_or(0, |n| n.hidden);
    AgentNets {
        variant,
        config,
        actor_hidden: Array2::zeros((num_workers, width(&actor))),
        critic_hidden: Array2::zeros((num_workers, width(&critic))),
        params,
        actor,
        critic,
        num_actions,
        belief_size,
    }
}

/// Runs one batched step of a placed network.
///
/// `hidden` is the incoming recurrent state for recurrent networks.
pub fn net_step(
    tape: &mut Tape,
    layout: &NetLayout,
    placed: &PlacedNet,
    inputs: &[Encoded],
    hidden: Option<Var>,
) -> Result<NetOutput, AgentError> {
    let x = match (&layout.front, &placed.front) {
        (Front::Embed(tables), Some(vars)) => {
            let mut parts = Vec::with_capacity(tables.len());
            for (k, &table) in vars.iter().enumerate() {
                let mut idx = Vec::with_capacity(inputs.len());
                for e in inputs {
                    match e {
                        Encoded::Tokens(t) if t.len() == tables.len() => idx.push(t[k]),
                        other => return Err(AgentError::EncodingMismatch(format!("expected tokens, got {other:?}"))),
                    }
                }
                parts.push(tape.embed(table, &idx)?);
            }
            if parts.len() == 1 {
                parts[0]
            } else {
                tape.concat(&parts)?
            }
        }
        (Front::Dense(d), _) => {
            let mut m = Array2::zeros((inputs.len(), *d));
            for (r, e) in inputs.iter().enumerate() {
                match e {
                    Encoded::Vector(v) if v.len() == *d => m.row_mut(r).assign(&ndarray::aview1(v)),
                    other => {
                        return Err(AgentError::EncodingMismatch(format!(
                            "expected a vector of length {d}, got {other:?}"
                        )))
                    }
                }
            }
            tape.input(m)
        }
        _ => unreachable!("placement mirrors layout"),
    };
    let mut features = x;
    let mut new_hidden = None;
    if let Some(g) = &placed.gru {
        let h = hidden.ok_or_else(|| AgentError::EncodingMismatch("recurrent net needs a hidden state".into()))?;
        let h2 = tape.gru_step(features, h, g)?;
        new_hidden = Some(h2);
        features = h2;
    }
    for &(w, b) in &placed.fc {
        features = tape.affine(features, w, b, true)?;
    }
    let logits = tape.affine(features, placed.head.0, placed.head.1, false)?;
    let head = match layout.role {
        Role::Actor => tape.softmax(logits),
        Role::Critic => logits,
    };
    let belief = match placed.belief_head {
        Some((w, b)) => {
            let z = tape.affine(features, w, b, false)?;
            Some(tape.softmax(z))
        }
        None => None,
    };
    Ok(NetOutput {
        head,
        belief,
        hidden: new_hidden,
    })
}

/// Actor and critic placed on one tape.
#[derive(Debug, Clone)]
pub struct PlacedAgent {
    pub actor: PlacedNet,
    pub critic: PlacedNet,
}

impl AgentNets {
    pub fn num_workers(&self) -> usize {
        self.actor_hidden.nrows()
    }

    pub fn place(&self, tape: &mut Tape) -> Result<PlacedAgent, AgentError> {
        match (&self.actor, &self.critic) {
            (Some(a), Some(c)) => Ok(PlacedAgent {
                actor: a.place(tape),
                critic: c.place(tape),
            }),
            _ => Err(AgentError::NoNetworks),
        }
    }

    /// Zeroes one worker's actor and critic recurrent state.
    pub fn reset_hidden(&mut self, worker: usize) {
        if self.actor_hidden.ncols() > 0 {
            self.actor_hidden.row_mut(worker).fill(0.0);
        }
        if self.critic_hidden.ncols() > 0 {
            self.critic_hidden.row_mut(worker).fill(0.0);
        }
    }

    fn forward_one(&mut self, role: Role, input: &Encoded, worker: usize) -> Result<(Vec<f64>, Option<Vec<f64>>), AgentError> {
        let layout = match role {
            Role::Actor => self.actor.as_ref(),
            Role::Critic => self.critic.as_ref(),
        }
        .ok_or(AgentError::NoNetworks)?;
        let state = match role {
            Role::Actor => &self.actor_hidden,
            Role::Critic => &self.critic_hidden,
        };
        let mut tape = Tape::new(&self.params);
        let placed = layout.place(&mut tape);
        let h = layout
            .is_recurrent()
            .then(|| tape.input(state.row(worker).to_owned().insert_axis(ndarray::Axis(0))));
        let out = net_step(&mut tape, layout, &placed, std::slice::from_ref(input), h)?;
        let head = tape.value(out.head).row(0).to_vec();
        let belief = out.belief.map(|b| tape.value(b).row(0).to_vec());
        let new_h = out.hidden.map(|h| tape.value(h).row(0).to_owned());
        drop(tape);
        if let Some(h) = new_h {
            match role {
                Role::Actor => self.actor_hidden.row_mut(worker).assign(&h),
                Role::Critic => self.critic_hidden.row_mut(worker).assign(&h),
            }
        }
        Ok((head, belief))
    }

    /// Policy and optional belief prediction for one worker; advances that
    /// worker's actor state.
    pub fn actor_forward(&mut self, input: &Encoded, worker: usize) -> Result<(Vec<f64>, Option<Vec<f64>>), AgentError> {
        if self.variant.is_random() {
            return Ok((vec![1.0 / self.num_actions as f64; self.num_actions], None));
        }
        self.forward_one(Role::Actor, input, worker)
    }

    /// Value and optional belief prediction for one worker; advances that
    /// worker's critic state.
    pub fn critic_forward(&mut self, input: &Encoded, worker: usize) -> Result<(f64, Option<Vec<f64>>), AgentError> {
        let (v, b) = self.forward_one(Role::Critic, input, worker)?;
        Ok((v[0], b))
    }
}

/// Draws an action from `policy`.
pub fn sample_action<R: Rng + ?Sized>(policy: &[f64], rng: &mut R) -> usize {
    sample_index(policy, rng)
}
