//! Exact Bayesian filtering over tabular and factored models.

mod momdp;

pub use momdp::{
    flatten_momdp, momdp_belief_update, MomdpBelief, MomdpError, MomdpModel, XOutcome, YOutcome,
};

use crate::pomdp::PomdpModel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    /// The observation has zero probability under the current belief; the
    /// history is impossible.
    #[error("observation {observation} after action {action} has zero probability")]
    ZeroProbabilityObservation { action: usize, observation: usize },
    #[error("invalid belief: {0}")]
    Invalid(String),
}

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Checks entries lie in `[0, 1]` and sum to one within `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self, BeliefError> {
        if probs.is_empty() {
            return Err(BeliefError::Invalid("empty belief".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BeliefError::Invalid(format!("entry {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(BeliefError::Invalid(format!("sums to {total}")));
        }
        Ok(Belief(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Belief(v)
    }

    /// Normalizes nonnegative weights; `None` when they sum to zero.
    pub fn from_weights(weights: Vec<f64>) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(Belief(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }
}

pub fn initial_belief(model: &PomdpModel) -> Belief {
    Belief(model.start.clone())
}

/// `Σ_s T[s, a, s'] b(s)` for every `s'`, iterating only nonzero transitions.
pub fn predict(model: &PomdpModel, b: &Belief, a: usize) -> Vec<f64> {
    let mut predicted = vec![0.0; model.num_states()];
    for (s, &bs) in b.probs().iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        for &(next, p) in model.successors(s, a) {
            predicted[next] += p * bs;
        }
    }
    predicted
}

/// Dense reference for [`predict`]; both accumulate in ascending `s` order.
pub fn predict_dense(model: &PomdpModel, b: &Belief, a: usize) -> Vec<f64> {
    let ns = model.num_states();
    let mut predicted = vec![0.0; ns];
    for (s, &bs) in b.probs().iter().enumerate() {
        let row = model.transition_row(s, a);
        for next in 0..ns {
            predicted[next] += row[next] * bs;
        }
    }
    predicted
}

/// `P(o | a, b)`.
pub fn observation_likelihood(model: &PomdpModel, b: &Belief, a: usize, o: usize) -> f64 {
    predict(model, b, a)
        .iter()
        .enumerate()
        .map(|(next, &p)| model.observation(next, a, o) * p)
        .sum()
}

/// One step of the exact belief filter.
pub fn belief_update(
    model: &PomdpModel,
    b: &Belief,
    a: usize,
    o: usize,
) -> Result<Belief, BeliefError> {
    let predicted = predict(model, b, a);
    let weights: Vec<f64> = predicted
        .iter()
        .enumerate()
        .map(|(next, &p)| model.observation(next, a, o) * p)
        .collect();
    Belief::from_weights(weights).ok_or(BeliefError::ZeroProbabilityObservation {
        action: a,
        observation: o,
    })
}
