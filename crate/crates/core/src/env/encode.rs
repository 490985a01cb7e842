use super::{Domain, DomainKind};
use crate::belief::Belief;
use serde::{Deserialize, Serialize};

/// What a network reads: the action-observation history, the exact belief,
/// or the true state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputSource {
    History,
    Belief,
    State,
}

/// Network input for one decision step.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoded {
    /// Indices into embedding tables, one per table.
    Tokens(Vec<usize>),
    /// Dense features in `[0, 1]`.
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputShape {
    /// Vocabulary size of each embedded token.
    Tokens(Vec<usize>),
    Vector(usize),
}

/// Everything an encoder may read at one step.
#[derive(Debug, Clone, Copy)]
pub struct Percept<'a> {
    pub observation: usize,
    pub prev_action: Option<usize>,
    /// Tabular state or hidden `y`.
    pub state: usize,
    pub x: usize,
    pub memory: u8,
    pub belief: &'a Belief,
}

pub(super) fn input_shape(domain: &Domain, source: InputSource) -> InputShape {
    let na = domain.num_actions();
    match (&domain.kind, source) {
        // one reserved index each for "no observation yet" / "no action yet"
        (DomainKind::Tabular(m), InputSource::History) => {
            InputShape::Tokens(vec![m.num_observations() + 1, na + 1])
        }
        (DomainKind::Tabular(m), InputSource::Belief) => InputShape::Vector(m.num_states()),
        (DomainKind::Tabular(m), InputSource::State) => InputShape::Tokens(vec![m.num_states()]),
        (DomainKind::Robot(r), InputSource::History) => InputShape::Vector(r.x_feature_dim() + na),
        (DomainKind::Robot(r), InputSource::Belief) => InputShape::Vector(r.x_feature_dim() + r.num_y()),
        (DomainKind::Robot(r), InputSource::State) => {
            InputShape::Vector(r.x_feature_dim() + r.y_feature_dim() + r.memory_bits())
        }
    }
}

/// Encodes a percept for a network reading `source`.
///
/// Tabular histories become `(observation, previous action)` token pairs,
/// with reserved indices `|Ω|` and `|A|` before the first step. Robot
/// histories concatenate the normalized observed features with a one-hot
/// previous action (all zeros before the first step). Robot beliefs are the
/// pair `(x, b_Y)`, so the observed features are prepended.
pub fn encode_input(domain: &Domain, p: &Percept<'_>, source: InputSource) -> Encoded {
    let na = domain.num_actions();
    match (&domain.kind, source) {
        (DomainKind::Tabular(_), InputSource::History) => {
            Encoded::Tokens(vec![p.observation, p.prev_action.unwrap_or(na)])
        }
        (DomainKind::Tabular(_), InputSource::Belief) => Encoded::Vector(p.belief.probs().to_vec()),
        (DomainKind::Tabular(_), InputSource::State) => Encoded::Tokens(vec![p.state]),
        (DomainKind::Robot(r), InputSource::History) => {
            let mut v = r.x_features(p.x);
            let mut onehot = vec![0.0; na];
            if let Some(a) = p.prev_action {
                onehot[a] = 1.0;
            }
            v.extend(onehot);
            Encoded::Vector(v)
        }
        (DomainKind::Robot(r), InputSource::Belief) => {
            let mut v = r.x_features(p.x);
            v.extend_from_slice(p.belief.probs());
            Encoded::Vector(v)
        }
        (DomainKind::Robot(r), InputSource::State) => {
            let mut v = r.x_features(p.x);
            v.extend(r.y_features(p.state));
            for bit in 0..r.memory_bits() {
                v.push(f64::from((p.memory >> bit) & 1));
            }
            Encoded::Vector(v)
        }
    }
}
