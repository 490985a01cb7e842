//! Mixed-observability models: state `(x, y)` with `x` observed and `y`
//! hidden. Filtering only tracks a distribution over `y`.

use super::{Belief, BeliefError};
use crate::pomdp::PomdpModel;
use crate::sampling::sample_sparse;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MomdpError {
    #[error("stochasticity violation in {0}")]
    Stochasticity(String),
    #[error("index out of range in {0}")]
    OutOfRange(String),
}

/// Successor of the hidden component given `(x, y, a, x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct YOutcome {
    pub y: usize,
    pub prob: f64,
    pub reward: f64,
    pub terminal: bool,
}

/// Successor of the observed component given `(x, y, a)`, with the
/// conditional `T_Y(x, y, a, x', ·)` attached.
#[derive(Debug, Clone, PartialEq)]
pub struct XOutcome {
    pub x: usize,
    pub prob: f64,
    pub y_outcomes: Vec<YOutcome>,
}

/// Factored model `(X, Y, A, T_X, T_Y, R, Ω, O)` with sparse dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct MomdpModel {
    num_x: usize,
    num_y: usize,
    num_actions: usize,
    num_observations: usize,
    pub discount: f64,
    /// Joint start distribution indexed `x * |Y| + y`.
    pub start: Vec<f64>,
    dynamics: Vec<Vec<XOutcome>>,
    observations: Vec<Vec<(usize, f64)>>,
}

impl MomdpModel {
    pub fn new(num_x: usize, num_y: usize, num_actions: usize, num_observations: usize) -> Self {
        MomdpModel {
            num_x,
            num_y,
            num_actions,
            num_observations,
            discount: 1.0,
            start: vec![1.0 / (num_x * num_y) as f64; num_x * num_y],
            dynamics: vec![Vec::new(); num_x * num_y * num_actions],
            observations: vec![Vec::new(); num_x * num_y * num_actions],
        }
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn num_y(&self) -> usize {
        self.num_y
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    #[inline]
    fn key(&self, x: usize, y: usize, a: usize) -> usize {
        (x * self.num_y + y) * self.num_actions + a
    }

    pub fn set_dynamics(&mut self, x: usize, y: usize, a: usize, outcomes: Vec<XOutcome>) {
        let k = self.key(x, y, a);
        self.dynamics[k] = outcomes;
    }

    pub fn dynamics(&self, x: usize, y: usize, a: usize) -> &[XOutcome] {
        &self.dynamics[self.key(x, y, a)]
    }

    /// Sets `O(x', y', a, ·)` as sparse `(o, p)` pairs.
    pub fn set_observation(&mut self, next_x: usize, next_y: usize, a: usize, dist: Vec<(usize, f64)>) {
        let k = self.key(next_x, next_y, a);
        self.observations[k] = dist;
    }

    pub fn observation_dist(&self, next_x: usize, next_y: usize, a: usize) -> &[(usize, f64)] {
        &self.observations[self.key(next_x, next_y, a)]
    }

    pub fn observation(&self, next_x: usize, next_y: usize, a: usize, o: usize) -> f64 {
        self.observation_dist(next_x, next_y, a)
            .iter()
            .filter(|e| e.0 == o)
            .map(|e| e.1)
            .sum()
    }

    /// `T_X(x, y, a, x')`.
    pub fn transition_x(&self, x: usize, y: usize, a: usize, next_x: usize) -> f64 {
        self.dynamics(x, y, a)
            .iter()
            .filter(|e| e.x == next_x)
            .map(|e| e.prob)
            .sum()
    }

    /// `P(y | x)` under the start distribution; `None` if `x` has no mass.
    pub fn start_given_x(&self, x: usize) -> Option<Belief> {
        let row = self.start[x * self.num_y..(x + 1) * self.num_y].to_vec();
        Belief::from_weights(row)
    }

    /// Marginal start distribution over `x`.
    pub fn start_x(&self) -> Vec<f64> {
        (0..self.num_x)
            .map(|x| self.start[x * self.num_y..(x + 1) * self.num_y].iter().sum())
            .collect()
    }

    pub fn validate(&self) -> Result<(), MomdpError> {
        let tol = 1e-9;
        let total: f64 = self.start.iter().sum();
        if (total - 1.0).abs() > tol || self.start.len() != self.num_x * self.num_y {
            return Err(MomdpError::Stochasticity("start".into()));
        }
        for x in 0..self.num_x {
            for y in 0..self.num_y {
                for a in 0..self.num_actions {
                    let outs = self.dynamics(x, y, a);
                    let px: f64 = outs.iter().map(|o| o.prob).sum();
                    if (px - 1.0).abs() > tol {
                        return Err(MomdpError::Stochasticity(format!("T_X({x}, {y}, {a}, ·)")));
                    }
                    for o in outs {
                        if o.x >= self.num_x || o.y_outcomes.iter().any(|yo| yo.y >= self.num_y) {
                            return Err(MomdpError::OutOfRange(format!("T({x}, {y}, {a})")));
                        }
                        let py: f64 = o.y_outcomes.iter().map(|yo| yo.prob).sum();
                        if (py - 1.0).abs() > tol {
                            return Err(MomdpError::Stochasticity(format!(
                                "T_Y({x}, {y}, {a}, {}, ·)",
                                o.x
                            )));
                        }
                    }
                    let po: f64 = self.observation_dist(x, y, a).iter().map(|e| e.1).sum();
                    if (po - 1.0).abs() > tol {
                        return Err(MomdpError::Stochasticity(format!("O({x}, {y}, {a}, ·)")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Samples `(x', y', reward, terminal)` from the factored dynamics.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        x: usize,
        y: usize,
        a: usize,
        rng: &mut R,
    ) -> (usize, usize, f64, bool) {
        let outs = self.dynamics(x, y, a);
        let weights: Vec<(usize, f64)> = outs.iter().enumerate().map(|(i, o)| (i, o.prob)).collect();
        let xo = &outs[sample_sparse(&weights, rng)];
        let yw: Vec<(usize, f64)> = xo.y_outcomes.iter().enumerate().map(|(i, o)| (i, o.prob)).collect();
        let yo = &xo.y_outcomes[sample_sparse(&yw, rng)];
        (xo.x, yo.y, yo.reward, yo.terminal)
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, next_x: usize, next_y: usize, a: usize, rng: &mut R) -> usize {
        sample_sparse(self.observation_dist(next_x, next_y, a), rng)
    }
}

/// Belief `(x, b_Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomdpBelief {
    pub x: usize,
    pub hidden: Belief,
}

impl MomdpBelief {
    /// Belief after observing the initial `x`.
    pub fn initial(model: &MomdpModel, x: usize) -> Option<Self> {
        Some(MomdpBelief {
            x,
            hidden: model.start_given_x(x)?,
        })
    }
}

/// Factored filter step: `b'_Y(y') ∝ O(x', y', a, o) Σ_y T_X T_Y b_Y(y)`.
pub fn momdp_belief_update(
    model: &MomdpModel,
    belief: &MomdpBelief,
    a: usize,
    next_x: usize,
    o: usize,
) -> Result<MomdpBelief, BeliefError> {
    let mut weights = vec![0.0; model.num_y];
    for (y, &by) in belief.hidden.probs().iter().enumerate() {
        if by == 0.0 {
            continue;
        }
        for xo in model.dynamics(belief.x, y, a) {
            if xo.x != next_x {
                continue;
            }
            for yo in &xo.y_outcomes {
                weights[yo.y] += xo.prob * yo.prob * by;
            }
        }
    }
    for (y, w) in weights.iter_mut().enumerate() {
        if *w != 0.0 {
            *w *= model.observation(next_x, y, a, o);
        }
    }
    let hidden = Belief::from_weights(weights).ok_or(BeliefError::ZeroProbabilityObservation {
        action: a,
        observation: next_x * model.num_observations + o,
    })?;
    Ok(MomdpBelief { x: next_x, hidden })
}

/// Joins `X × Y` into a flat state `x * |Y| + y` and exposes `x'` through the
/// observation channel as `x' * |Ω| + o`.
pub fn flatten_momdp(model: &MomdpModel) -> PomdpModel {
    let nx = model.num_x;
    let ny = model.num_y;
    let no = model.num_observations;
    let na = model.num_actions;
    let ns = nx * ny;
    let mut flat = PomdpModel::new(ns, na, nx * no);
    flat.discount = model.discount;
    flat.start = model.start.clone();
    for x in 0..nx {
        for y in 0..ny {
            let s = x * ny + y;
            for a in 0..na {
                for xo in model.dynamics(x, y, a) {
                    for yo in &xo.y_outcomes {
                        let next = xo.x * ny + yo.y;
                        let p = flat.transition(s, a, next) + xo.prob * yo.prob;
                        flat.set_transition(s, a, next, p);
                        for fo in 0..nx * no {
                            flat.set_reward(s, a, next, fo, yo.reward);
                        }
                        if yo.terminal {
                            flat.set_terminal(s, a, next, true);
                        }
                    }
                }
                for &(o, p) in model.observation_dist(x, y, a) {
                    flat.set_observation(s, a, x * no + o, p);
                }
            }
        }
    }
    flat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::belief_update;

    /// |X| = 2 with `x' = y` revealed only through `x`; Y static.
    fn static_hidden(ny: usize) -> MomdpModel {
        let mut m = MomdpModel::new(1, ny, 1, ny);
        for y in 0..ny {
            m.set_dynamics(
                0,
                y,
                0,
                vec![XOutcome {
                    x: 0,
                    prob: 1.0,
                    y_outcomes: vec![YOutcome { y, prob: 1.0, reward: 0.0, terminal: false }],
                }],
            );
            m.set_observation(0, y, 0, vec![(y, 1.0)]);
        }
        m
    }

    #[test]
    fn single_hidden_value_is_certain() {
        let m = static_hidden(1);
        let b = MomdpBelief::initial(&m, 0).unwrap();
        let b2 = momdp_belief_update(&m, &b, 0, 0, 0).unwrap();
        assert_eq!(b2.hidden.probs(), &[1.0]);
    }

    #[test]
    fn perfect_observation_gives_one_hot() {
        let m = static_hidden(4);
        let b = MomdpBelief::initial(&m, 0).unwrap();
        let b2 = momdp_belief_update(&m, &b, 0, 0, 2).unwrap();
        assert_eq!(b2.hidden, Belief::one_hot(4, 2));
    }

    #[test]
    fn single_x_flattens_to_y_only_pomdp() {
        let m = static_hidden(3);
        let flat = flatten_momdp(&m);
        assert_eq!(flat.num_states(), 3);
        assert_eq!(flat.num_observations(), 3);
        for y in 0..3 {
            assert_eq!(flat.transition(y, 0, y), 1.0);
            assert_eq!(flat.observation(y, 0, y), 1.0);
        }
        let b = belief_update(&flat, &Belief::uniform(3), 0, 1).unwrap();
        assert_eq!(b, Belief::one_hot(3, 1));
    }
}
