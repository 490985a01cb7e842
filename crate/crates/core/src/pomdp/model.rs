use std::fmt;
use std::sync::OnceLock;

/// Probability-mass tolerance used by [`validate_model`].
pub const PROB_TOLERANCE: f64 = 1e-9;

/// A tabular POMDP with episodic termination flags.
///
/// Tensors are stored densely in row-major order:
/// `transition[s][a][s']`, `observation[s'][a][o]`, `reward[s][a][s'][o]`
/// and `terminal[s][a][s']`.
#[derive(Clone)]
pub struct PomdpModel {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    pub state_names: Option<Vec<String>>,
    pub action_names: Option<Vec<String>>,
    pub observation_names: Option<Vec<String>>,
    pub discount: f64,
    pub start: Vec<f64>,
    transition: Vec<f64>,
    observation: Vec<f64>,
    reward: Vec<f64>,
    terminal: Vec<bool>,
    successors: OnceLock<Vec<Vec<(usize, f64)>>>,
}

impl PomdpModel {
    /// An all-zero model with uniform start and discount 1.
    pub fn new(num_states: usize, num_actions: usize, num_observations: usize) -> Self {
        let ns = num_states;
        let na = num_actions;
        let no = num_observations;
        PomdpModel {
            num_states: ns,
            num_actions: na,
            num_observations: no,
            state_names: None,
            action_names: None,
            observation_names: None,
            discount: 1.0,
            start: vec![1.0 / ns.max(1) as f64; ns],
            transition: vec![0.0; ns * na * ns],
            observation: vec![0.0; ns * na * no],
            reward: vec![0.0; ns * na * ns * no],
            terminal: vec![false; ns * na * ns],
            successors: OnceLock::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    #[inline]
    fn t_index(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.num_actions + a) * self.num_states + next
    }

    #[inline]
    fn o_index(&self, next: usize, a: usize, o: usize) -> usize {
        (next * self.num_actions + a) * self.num_observations + o
    }

    #[inline]
    fn r_index(&self, s: usize, a: usize, next: usize, o: usize) -> usize {
        self.t_index(s, a, next) * self.num_observations + o
    }

    #[inline]
    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.t_index(s, a, next)]
    }

    /// The distribution `T[s, a, ·]`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let i = self.t_index(s, a, 0);
        &self.transition[i..i + self.num_states]
    }

    #[inline]
    pub fn observation(&self, next: usize, a: usize, o: usize) -> f64 {
        self.observation[self.o_index(next, a, o)]
    }

    /// The distribution `O[s', a, ·]`.
    pub fn observation_row(&self, next: usize, a: usize) -> &[f64] {
        let i = self.o_index(next, a, 0);
        &self.observation[i..i + self.num_observations]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize, next: usize, o: usize) -> f64 {
        self.reward[self.r_index(s, a, next, o)]
    }

    #[inline]
    pub fn is_terminal(&self, s: usize, a: usize, next: usize) -> bool {
        self.terminal[self.t_index(s, a, next)]
    }

    pub fn set_transition(&mut self, s: usize, a: usize, next: usize, p: f64) {
        let i = self.t_index(s, a, next);
        self.transition[i] = p;
        self.successors = OnceLock::new();
    }

    pub fn set_observation(&mut self, next: usize, a: usize, o: usize, p: f64) {
        let i = self.o_index(next, a, o);
        self.observation[i] = p;
    }

    pub fn set_reward(&mut self, s: usize, a: usize, next: usize, o: usize, r: f64) {
        let i = self.r_index(s, a, next, o);
        self.reward[i] = r;
    }

    /// Sets `r(s, a, s', o)` for every `s'` and `o`.
    pub fn set_reward_broadcast(&mut self, s: usize, a: usize, r: f64) {
        for next in 0..self.num_states {
            for o in 0..self.num_observations {
                self.set_reward(s, a, next, o, r);
            }
        }
    }

    pub fn set_terminal(&mut self, s: usize, a: usize, next: usize, flag: bool) {
        let i = self.t_index(s, a, next);
        self.terminal[i] = flag;
    }

    pub fn has_terminal_transitions(&self) -> bool {
        self.terminal.iter().any(|&t| t)
    }

    /// Nonzero entries of `T[s, a, ·]` in ascending successor order.
    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        let table = self.successors.get_or_init(|| {
            let mut table = Vec::with_capacity(self.num_states * self.num_actions);
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    table.push(
                        self.transition_row(s, a)
                            .iter()
                            .enumerate()
                            .filter(|(_, &p)| p != 0.0)
                            .map(|(n, &p)| (n, p))
                            .collect(),
                    );
                }
            }
            table
        });
        &table[s * self.num_actions + a]
    }

    pub fn state_label(&self, s: usize) -> String {
        label(&self.state_names, s)
    }

    pub fn action_label(&self, a: usize) -> String {
        label(&self.action_names, a)
    }

    pub fn observation_label(&self, o: usize) -> String {
        label(&self.observation_names, o)
    }
}

fn label(names: &Option<Vec<String>>, i: usize) -> String {
    match names {
        Some(n) if i < n.len() => n[i].clone(),
        _ => i.to_string(),
    }
}

impl PartialEq for PomdpModel {
    fn eq(&self, other: &Self) -> bool {
        self.num_states == other.num_states
            && self.num_actions == other.num_actions
            && self.num_observations == other.num_observations
            && self.state_names == other.state_names
            && self.action_names == other.action_names
            && self.observation_names == other.observation_names
            && self.discount.to_bits() == other.discount.to_bits()
            && bitwise_eq(&self.start, &other.start)
            && bitwise_eq(&self.transition, &other.transition)
            && bitwise_eq(&self.observation, &other.observation)
            && bitwise_eq(&self.reward, &other.reward)
            && self.terminal == other.terminal
    }
}

fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl fmt::Debug for PomdpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PomdpModel")
            .field("num_states", &self.num_states)
            .field("num_actions", &self.num_actions)
            .field("num_observations", &self.num_observations)
            .field("discount", &self.discount)
            .finish_non_exhaustive()
    }
}

/// One failed model invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.rule, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseDiagnostics {
    pub violations: Vec<Violation>,
}

impl ParseDiagnostics {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ParseDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation of `model`; empty when the model is valid.
pub fn validate_model(model: &PomdpModel) -> ParseDiagnostics {
    let mut violations = Vec::new();
    let ns = model.num_states;
    let na = model.num_actions;
    let no = model.num_observations;

    if ns == 0 || na == 0 || no == 0 {
        violations.push(Violation {
            location: "header".into(),
            rule: "dimension",
            message: format!("empty set: |S|={ns}, |A|={na}, |O|={no}"),
        });
        return ParseDiagnostics { violations };
    }
    if !(model.discount > 0.0 && model.discount <= 1.0) {
        violations.push(Violation {
            location: "discount".into(),
            rule: "range",
            message: format!("discount {} outside (0, 1]", model.discount),
        });
    }

    let mut check_prob = |location: String, p: f64| {
        if !(0.0..=1.0).contains(&p) {
            violations.push(Violation {
                location,
                rule: "probability range",
                message: format!("value {p} outside [0, 1]"),
            });
        }
    };
    for (s, &p) in model.start.iter().enumerate() {
        check_prob(format!("start[{}]", model.state_label(s)), p);
    }
    for s in 0..ns {
        for a in 0..na {
            for n in 0..ns {
                check_prob(
                    format!(
                        "T[{}, {}, {}]",
                        model.state_label(s),
                        model.action_label(a),
                        model.state_label(n)
                    ),
                    model.transition(s, a, n),
                );
            }
        }
    }
    for n in 0..ns {
        for a in 0..na {
            for o in 0..no {
                check_prob(
                    format!(
                        "O[{}, {}, {}]",
                        model.state_label(n),
                        model.action_label(a),
                        model.observation_label(o)
                    ),
                    model.observation(n, a, o),
                );
            }
        }
    }

    if model.start.len() != ns {
        violations.push(Violation {
            location: "start".into(),
            rule: "dimension",
            message: format!("start has {} entries, expected {ns}", model.start.len()),
        });
    } else {
        let total: f64 = model.start.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            violations.push(Violation {
                location: "start".into(),
                rule: "stochasticity violation",
                message: format!("start sums to {total}"),
            });
        }
    }
    for s in 0..ns {
        for a in 0..na {
            let total: f64 = model.transition_row(s, a).iter().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                violations.push(Violation {
                    location: format!("({}, {})", model.state_label(s), model.action_label(a)),
                    rule: "stochasticity violation",
                    message: format!("T row sums to {total}"),
                });
            }
        }
    }
    for n in 0..ns {
        for a in 0..na {
            let total: f64 = model.observation_row(n, a).iter().sum();
            if (total - 1.0).abs() > PROB_TOLERANCE {
                violations.push(Violation {
                    location: format!("O({}, {})", model.state_label(n), model.action_label(a)),
                    rule: "stochasticity violation",
                    message: format!("O row sums to {total}"),
                });
            }
        }
    }
    for (i, r) in model.reward.iter().enumerate() {
        if !r.is_finite() {
            violations.push(Violation {
                location: format!("R[flat index {i}]"),
                rule: "finite reward",
                message: format!("reward {r} is not finite"),
            });
        }
    }
    ParseDiagnostics { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> PomdpModel {
        let mut m = PomdpModel::new(2, 1, 1);
        m.discount = 0.95;
        for s in 0..2 {
            m.set_transition(s, 0, s, 1.0);
            m.set_observation(s, 0, 0, 1.0);
        }
        m
    }

    #[test]
    fn valid_model_has_no_violations() {
        assert!(validate_model(&two_state()).is_empty());
    }

    #[test]
    fn start_mass_violation_names_start() {
        let mut m = two_state();
        m.start = vec![0.6, 0.6];
        let d = validate_model(&m);
        assert_eq!(d.violations.len(), 1);
        assert_eq!(d.violations[0].location, "start");
    }

    #[test]
    fn negative_probability_names_cell() {
        let mut m = two_state();
        m.set_transition(0, 0, 0, 1.2);
        m.set_transition(0, 0, 1, -0.2);
        let d = validate_model(&m);
        assert!(d.violations.iter().any(|v| v.location == "T[0, 0, 1]"));
        assert!(d.violations.iter().any(|v| v.location == "T[0, 0, 0]"));
    }

    #[test]
    fn successors_skip_zeros() {
        let mut m = PomdpModel::new(3, 1, 1);
        m.set_transition(0, 0, 1, 0.7);
        m.set_transition(0, 0, 2, 0.3);
        assert_eq!(m.successors(0, 0), &[(1, 0.7), (2, 0.3)]);
        m.set_transition(0, 0, 0, 0.1);
        assert_eq!(m.successors(0, 0).len(), 3);
    }
}
