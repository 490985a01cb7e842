use super::{Rollout, TrainError};
use crate::tensor::{Matrix, Tape, Var};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Loss values of one update, each already averaged over the batch and
/// scaled by its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub actor: f64,
    pub critic: f64,
    pub entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bgn_actor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bgn_critic: Option<f64>,
    pub total: f64,
}

impl LossTerms {
    /// Sum of the individual terms, for checking `total`.
    pub fn sum_of_terms(&self) -> f64 {
        self.actor + self.critic + self.entropy + self.bgn_actor.unwrap_or(0.0) + self.bgn_critic.unwrap_or(0.0)
    }
}

/// Loss nodes on the tape that recorded the rollout.
#[derive(Debug, Clone, Copy)]
pub struct LossGraph {
    pub actor: Var,
    pub critic: Var,
    pub entropy: Var,
    pub bgn: Option<(Var, Var)>,
    pub total: Var,
}

impl LossGraph {
    pub fn terms(&self, tape: &Tape) -> LossTerms {
        LossTerms {
            actor: tape.scalar(self.actor),
            critic: tape.scalar(self.critic),
            entropy: tape.scalar(self.entropy),
            bgn_actor: self.bgn.map(|(a, _)| tape.scalar(a)),
            bgn_critic: self.bgn.map(|(_, c)| tape.scalar(c)),
            total: tape.scalar(self.total),
        }
    }
}

fn column(values: impl Iterator<Item = f64>, n: usize) -> Matrix {
    Array2::from_shape_vec((n, 1), values.collect()).expect("one value per worker")
}

fn add_all(tape: &mut Tape, terms: &[Var]) -> Result<Var, TrainError> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = tape.add(acc, t)?;
    }
    Ok(acc)
}

/// Actor, critic and entropy terms averaged over all `workers × T` steps.
///
/// `returns[t][w]` are the λ-returns. The advantage enters the actor term as
/// a constant, so the actor term differentiates only through the policy.
pub fn a2c_losses(
    tape: &mut Tape,
    rollout: &Rollout,
    returns: &[Vec<f64>],
    critic_coef: f64,
    entropy_coef: f64,
) -> Result<LossGraph, TrainError> {
    let (n, len) = (rollout.num_workers, rollout.length);
    let scale = 1.0 / (n * len) as f64;
    let (mut actor, mut critic, mut entropy) = (Vec::new(), Vec::new(), Vec::new());
    for t in 0..len {
        let policy = rollout.vars.policy[t];
        let value = rollout.vars.value[t];
        let adv = returns[t].iter().zip(&rollout.values[t]).map(|(r, v)| -(r - v) * scale);
        let log_p = tape.log_pick(policy, &rollout.actions[t])?;
        actor.push(tape.weighted_sum(log_p, column(adv, n))?);
        let target = tape.input(column(returns[t].iter().copied(), n));
        let diff = tape.sub(target, value)?;
        let sq = tape.square(diff);
        critic.push(tape.weighted_sum(sq, Array2::from_elem((n, 1), critic_coef * scale))?);
        let h = tape.entropy(policy);
        entropy.push(tape.weighted_sum(h, Array2::from_elem((n, 1), -entropy_coef * scale))?);
    }
    let actor = add_all(tape, &actor)?;
    let critic = add_all(tape, &critic)?;
    let entropy = add_all(tape, &entropy)?;
    let ac = tape.add(actor, critic)?;
    let total = tape.add(ac, entropy)?;
    Ok(LossGraph {
        actor,
        critic,
        entropy,
        bgn: None,
        total,
    })
}

/// Adds the mean cross-entropy between true beliefs and each network's
/// belief head.
pub fn bgn_augment(tape: &mut Tape, losses: LossGraph, rollout: &Rollout) -> Result<LossGraph, TrainError> {
    let targets = rollout.beliefs.as_ref().ok_or(TrainError::MissingBeliefs)?;
    let vars = &rollout.vars;
    if vars.actor_belief.len() != rollout.length || vars.critic_belief.len() != rollout.length {
        return Err(TrainError::MissingBeliefs);
    }
    let scale = 1.0 / (rollout.num_workers * rollout.length) as f64;
    let weights = Array2::from_elem((rollout.num_workers, 1), scale);
    let (mut a, mut c) = (Vec::new(), Vec::new());
    for t in 0..rollout.length {
        let ce = tape.cross_entropy(targets[t].clone(), vars.actor_belief[t])?;
        a.push(tape.weighted_sum(ce, weights.clone())?);
        let ce = tape.cross_entropy(targets[t].clone(), vars.critic_belief[t])?;
        c.push(tape.weighted_sum(ce, weights.clone())?);
    }
    let bgn_actor = add_all(tape, &a)?;
    let bgn_critic = add_all(tape, &c)?;
    let total = tape.add(losses.total, bgn_actor)?;
    let total = tape.add(total, bgn_critic)?;
    Ok(LossGraph {
        bgn: Some((bgn_actor, bgn_critic)),
        total,
        ..losses
    })
}
