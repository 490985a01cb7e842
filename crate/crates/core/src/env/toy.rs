use crate::pomdp::PomdpModel;

pub const TOY_STATES: usize = 4;
pub const TOY_LEFT: usize = 0;
pub const TOY_RIGHT: usize = 1;

/// Four-state corridor with perfectly observed positions.
///
/// The agent starts in cell 0 or 1 (equally likely); moving right from cell
/// 3 pays +1 and ends the episode. Moving left from cell 0 stays put.
pub fn toy_model() -> PomdpModel {
    let n = TOY_STATES;
    let mut m = PomdpModel::new(n, 2, n);
    m.discount = 0.9;
    m.start = vec![0.5, 0.5, 0.0, 0.0];
    m.action_names = Some(vec!["left".into(), "right".into()]);
    for s in 0..n {
        m.set_transition(s, TOY_LEFT, s.saturating_sub(1), 1.0);
        if s + 1 < n {
            m.set_transition(s, TOY_RIGHT, s + 1, 1.0);
        } else {
            m.set_transition(s, TOY_RIGHT, 0, 1.0);
            m.set_terminal(s, TOY_RIGHT, 0, true);
            for o in 0..n {
                m.set_reward(s, TOY_RIGHT, 0, o, 1.0);
            }
        }
        for a in 0..2 {
            m.set_observation(s, a, s, 1.0);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::validate_model;

    #[test]
    fn toy_is_valid() {
        let m = toy_model();
        assert!(validate_model(&m).is_empty());
        assert!(m.is_terminal(3, TOY_RIGHT, 0));
        assert_eq!(m.reward(3, TOY_RIGHT, 0, 2), 1.0);
    }
}
