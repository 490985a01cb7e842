//! RockSample[n, k] generator.
//!
//! States enumerate `(rover cell, rock bits)` plus one absorbing exit state.
//! Cell `(x, y)` has index `y * n + x`; `x` grows eastward and `y` grows
//! northward. Bit `i` of the rock mask is set when rock `i` is good.

use super::model::PomdpModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RockSampleError {
    #[error("RockSample needs at least one rock, got k = {0}")]
    NoRocks(usize),
    #[error("rock_coords has {got} entries, expected {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("cell ({0}, {1}) lies outside the {2}x{2} grid")]
    OutOfGrid(usize, usize, usize),
    #[error("two rocks share cell ({0}, {1})")]
    DuplicateRock(usize, usize),
    #[error("half-efficiency distance must be positive, got {0}")]
    BadDistance(f64),
    #[error("grid side must be positive")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSampleSpec {
    pub n: usize,
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
    pub half_efficiency_distance: f64,
    pub discount: f64,
}

pub const ACTION_NORTH: usize = 0;
pub const ACTION_SOUTH: usize = 1;
pub const ACTION_EAST: usize = 2;
pub const ACTION_WEST: usize = 3;
pub const ACTION_SAMPLE: usize = 4;
pub const FIRST_CHECK: usize = 5;

pub const OBS_GOOD: usize = 0;
pub const OBS_BAD: usize = 1;

pub const GOOD_SAMPLE_REWARD: f64 = 10.0;
pub const BAD_SAMPLE_REWARD: f64 = -10.0;
pub const EXIT_REWARD: f64 = 10.0;

/// Probability that `check` reports the true rock label at distance `d`.
pub fn check_accuracy(d: f64, half_efficiency_distance: f64) -> f64 {
    let efficiency = (2.0f64).powf(-d / half_efficiency_distance);
    (1.0 + efficiency) / 2.0
}

/// Builds RockSample with the conventional discount 0.95.
pub fn generate_rocksample(
    n: usize,
    k: usize,
    rock_coords: &[(usize, usize)],
    d0: f64,
) -> Result<PomdpModel, RockSampleError> {
    if k == 0 {
        return Err(RockSampleError::NoRocks(k));
    }
    if rock_coords.len() != k {
        return Err(RockSampleError::CountMismatch {
            expected: k,
            got: rock_coords.len(),
        });
    }
    RockSampleSpec {
        n,
        rocks: rock_coords.to_vec(),
        start: (0, n / 2),
        half_efficiency_distance: d0,
        discount: 0.95,
    }
    .build()
}

impl RockSampleSpec {
    pub fn num_rocks(&self) -> usize {
        self.rocks.len()
    }

    pub fn num_states(&self) -> usize {
        self.n * self.n * (1 << self.num_rocks()) + 1
    }

    pub fn exit_state(&self) -> usize {
        self.num_states() - 1
    }

    pub fn state_index(&self, x: usize, y: usize, mask: usize) -> usize {
        (y * self.n + x) * (1 << self.num_rocks()) + mask
    }

    /// `(x, y, mask)` for a non-exit state.
    pub fn decode(&self, s: usize) -> Option<(usize, usize, usize)> {
        if s >= self.exit_state() {
            return None;
        }
        let configs = 1 << self.num_rocks();
        let cell = s / configs;
        Some((cell % self.n, cell / self.n, s % configs))
    }

    fn validate(&self) -> Result<(), RockSampleError> {
        if self.n == 0 {
            return Err(RockSampleError::EmptyGrid);
        }
        if self.rocks.is_empty() {
            return Err(RockSampleError::NoRocks(0));
        }
        if !(self.half_efficiency_distance > 0.0) {
            return Err(RockSampleError::BadDistance(self.half_efficiency_distance));
        }
        for (i, &(x, y)) in self.rocks.iter().enumerate() {
            if x >= self.n || y >= self.n {
                return Err(RockSampleError::OutOfGrid(x, y, self.n));
            }
            if self.rocks[..i].contains(&(x, y)) {
                return Err(RockSampleError::DuplicateRock(x, y));
            }
        }
        let (sx, sy) = self.start;
        if sx >= self.n || sy >= self.n {
            return Err(RockSampleError::OutOfGrid(sx, sy, self.n));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<PomdpModel, RockSampleError> {
        self.validate()?;
        let k = self.num_rocks();
        let n = self.n;
        let ns = self.num_states();
        let na = k + 5;
        let exit = self.exit_state();
        let mut m = PomdpModel::new(ns, na, 2);
        m.discount = self.discount;
        let mut actions: Vec<String> = ["north", "south", "east", "west", "sample"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        actions.extend((0..k).map(|i| format!("check{i}")));
        m.action_names = Some(actions);
        m.observation_names = Some(vec!["good".into(), "bad".into()]);

        let configs = 1usize << k;
        m.start = vec![0.0; ns];
        for mask in 0..configs {
            m.start[self.state_index(self.start.0, self.start.1, mask)] = 1.0 / configs as f64;
        }

        for s in 0..ns {
            let Some((x, y, mask)) = self.decode(s) else {
                for a in 0..na {
                    m.set_transition(exit, a, exit, 1.0);
                    m.set_observation(exit, a, OBS_GOOD, 1.0);
                }
                continue;
            };
            for a in 0..na {
                let mut next = s;
                match a {
                    ACTION_NORTH if y + 1 < n => next = self.state_index(x, y + 1, mask),
                    ACTION_SOUTH if y > 0 => next = self.state_index(x, y - 1, mask),
                    ACTION_WEST if x > 0 => next = self.state_index(x - 1, y, mask),
                    ACTION_EAST => {
                        if x + 1 < n {
                            next = self.state_index(x + 1, y, mask);
                        } else {
                            next = exit;
                            m.set_reward_broadcast(s, a, EXIT_REWARD);
                            m.set_terminal(s, a, exit, true);
                        }
                    }
                    ACTION_SAMPLE => match self.rocks.iter().position(|&c| c == (x, y)) {
                        Some(i) if mask & (1 << i) != 0 => {
                            next = self.state_index(x, y, mask & !(1 << i));
                            m.set_reward_broadcast(s, a, GOOD_SAMPLE_REWARD);
                        }
                        _ => m.set_reward_broadcast(s, a, BAD_SAMPLE_REWARD),
                    },
                    _ => {}
                }
                m.set_transition(s, a, next, 1.0);
            }
        }

        // Observations depend on the successor state.
        for s in 0..exit {
            let (x, y, mask) = self.decode(s).unwrap();
            for a in 0..na {
                if a < FIRST_CHECK {
                    m.set_observation(s, a, OBS_GOOD, 1.0);
                    continue;
                }
                let i = a - FIRST_CHECK;
                let (rx, ry) = self.rocks[i];
                let dx = rx as f64 - x as f64;
                let dy = ry as f64 - y as f64;
                let p = check_accuracy(dx.hypot(dy), self.half_efficiency_distance);
                let (truth, other) = if mask & (1 << i) != 0 {
                    (OBS_GOOD, OBS_BAD)
                } else {
                    (OBS_BAD, OBS_GOOD)
                };
                m.set_observation(s, a, truth, p);
                m.set_observation(s, a, other, 1.0 - p);
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
fn default_spec(n: usize, k: usize) -> Option<RockSampleSpec> {
    let rocks = match (n, k) {
        (4, 4) => vec![(3, 1), (2, 1), (1, 3), (1, 0)],
        (5, 5) => vec![(2, 4), (0, 4), (3, 3), (2, 2), (4, 1)],
        _ => return None,
    };
    Some(RockSampleSpec {
        n,
        rocks,
        start: (0, n / 2),
        half_efficiency_distance: 20.0,
        discount: 0.95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::validate_model;

    #[test]
    fn rocksample_4_4_sizes() {
        let spec = default_spec(4, 4).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.num_states(), 257);
        assert_eq!(m.num_states(), 16 * 16 + 1);
        assert_eq!(m.num_actions(), 9);
        assert_eq!(m.num_observations(), 2);
        assert!(validate_model(&m).is_empty());
    }

    #[test]
    fn rocksample_5_5_enumeration() {
        let m = default_spec(5, 5).unwrap().build().unwrap();
        assert_eq!(m.num_actions(), 10);
        // 25 cells x 32 rock configurations + exit; the published table says 807.
        assert_eq!(m.num_states(), 801);
    }

    #[test]
    fn check_at_zero_distance_is_exact() {
        assert_eq!(check_accuracy(0.0, 20.0), 1.0);
        assert!((check_accuracy(20.0, 20.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sampling_flips_good_rock() {
        let spec = default_spec(4, 4).unwrap();
        let m = spec.build().unwrap();
        let (rx, ry) = spec.rocks[1];
        let s = spec.state_index(rx, ry, 0b0010);
        let after = spec.state_index(rx, ry, 0);
        assert_eq!(m.transition(s, ACTION_SAMPLE, after), 1.0);
        assert_eq!(m.reward(s, ACTION_SAMPLE, after, 0), GOOD_SAMPLE_REWARD);
        assert_eq!(m.reward(after, ACTION_SAMPLE, after, 1), BAD_SAMPLE_REWARD);
    }

    #[test]
    fn exit_is_terminal() {
        let spec = default_spec(4, 4).unwrap();
        let m = spec.build().unwrap();
        let s = spec.state_index(3, 2, 5);
        let exit = spec.exit_state();
        assert_eq!(m.transition(s, ACTION_EAST, exit), 1.0);
        assert!(m.is_terminal(s, ACTION_EAST, exit));
        assert_eq!(m.reward(s, ACTION_EAST, exit, 0), EXIT_REWARD);
    }

    #[test]
    fn start_is_uniform_over_configurations_at_start_cell() {
        let spec = default_spec(4, 4).unwrap();
        let m = spec.build().unwrap();
        let support: Vec<usize> = (0..m.num_states()).filter(|&s| m.start[s] > 0.0).collect();
        assert_eq!(support.len(), 16);
        for s in support {
            let (x, y, _) = spec.decode(s).unwrap();
            assert_eq!((x, y), spec.start);
            assert_eq!(m.start[s], 1.0 / 16.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(generate_rocksample(4, 0, &[], 20.0), Err(RockSampleError::NoRocks(0)));
        assert_eq!(
            generate_rocksample(4, 1, &[(4, 0)], 20.0),
            Err(RockSampleError::OutOfGrid(4, 0, 4))
        );
        assert_eq!(
            generate_rocksample(4, 2, &[(1, 1), (1, 1)], 20.0),
            Err(RockSampleError::DuplicateRock(1, 1))
        );
        assert_eq!(
            generate_rocksample(4, 1, &[(1, 1)], 0.0),
            Err(RockSampleError::BadDistance(0.0))
        );
    }
}
