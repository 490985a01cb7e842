//! Discretized force-feedback manipulation domains.
//!
//! Each domain is a deterministic function of `(x, y, a)` enumerated into a
//! [`MomdpModel`]. The agent observes `x'` directly, so the model carries a
//! single dummy observation. Task success can depend on simulator memory that
//! is not part of `Y` (contact history in TwoBumps-2D), so the simulator, not
//! the model's reward table, decides success.

use crate::belief::{MomdpModel, XOutcome, YOutcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RobotKind {
    TopPlate,
    TwoBumps1D,
    TwoBumps2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotParams {
    /// Stack height bound (TopPlate), cell count (TwoBumps-1D) or grid side
    /// (TwoBumps-2D).
    pub size: usize,
    pub discount: f64,
    pub max_episode_length: usize,
}

/// Result of one deterministic simulator transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub x: usize,
    pub y: usize,
    pub terminal: bool,
    /// Memoryless part of the success predicate.
    pub goal: bool,
}

pub const TOPPLATE_UP: usize = 0;
pub const TOPPLATE_DOWN: usize = 1;
pub const TOPPLATE_GRASP: usize = 2;

pub const BUMPS_LEFT_COMPLIANT: usize = 0;
pub const BUMPS_RIGHT_COMPLIANT: usize = 1;
pub const BUMPS_LEFT_STIFF: usize = 2;
pub const BUMPS_RIGHT_STIFF: usize = 3;

/// Contact readings in TwoBumps-1D: the side of the finger that is deflected.
pub const CONTACT_NONE: usize = 0;
pub const CONTACT_LEFT: usize = 1;
pub const CONTACT_RIGHT: usize = 2;

pub const GRID_NORTH: usize = 0;
pub const GRID_SOUTH: usize = 1;
pub const GRID_EAST: usize = 2;
pub const GRID_WEST: usize = 3;
pub const GRID_GRASP: usize = 4;

pub const READING_NONE: usize = 0;
pub const READING_SMALL: usize = 1;
pub const READING_LARGE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotDomain {
    pub kind: RobotKind,
    pub params: RobotParams,
    model: MomdpModel,
}

impl RobotDomain {
    pub fn new(kind: RobotKind, params: RobotParams) -> Self {
        let mut d = RobotDomain {
            kind,
            params,
            model: MomdpModel::new(1, 1, 1, 1),
        };
        d.model = d.build_model();
        d
    }

    pub fn model(&self) -> &MomdpModel {
        &self.model
    }

    pub fn num_x(&self) -> usize {
        let n = self.params.size;
        match self.kind {
            RobotKind::TopPlate => 2 * n + 1,
            RobotKind::TwoBumps1D => 3 * n,
            RobotKind::TwoBumps2D => 3 * n * n,
        }
    }

    pub fn num_y(&self) -> usize {
        let n = self.params.size;
        match self.kind {
            RobotKind::TopPlate => n,
            RobotKind::TwoBumps1D => n * n,
            RobotKind::TwoBumps2D => n.pow(4),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self.kind {
            RobotKind::TopPlate => 3,
            RobotKind::TwoBumps1D => 4,
            RobotKind::TwoBumps2D => 5,
        }
    }

    pub fn action_names(&self) -> Vec<&'static str> {
        match self.kind {
            RobotKind::TopPlate => vec!["up", "down", "grasp"],
            RobotKind::TwoBumps1D => vec!["left-compliant", "right-compliant", "left-stiff", "right-stiff"],
            RobotKind::TwoBumps2D => vec!["north", "south", "east", "west", "grasp"],
        }
    }

    /// Extra simulator memory bits appended to state vectors.
    pub fn memory_bits(&self) -> usize {
        match self.kind {
            RobotKind::TwoBumps2D => 2,
            _ => 0,
        }
    }

    /// Deterministic transition `(x, y, a) ↦ (x', y')`.
    pub fn outcome(&self, x: usize, y: usize, a: usize) -> Outcome {
        match self.kind {
            RobotKind::TopPlate => self.topplate_outcome(x, y, a),
            RobotKind::TwoBumps1D => self.bumps1d_outcome(x, y, a),
            RobotKind::TwoBumps2D => self.bumps2d_outcome(x, y, a),
        }
    }

    // TopPlate: x = 2j + contact for levels j < n, x = 2n for the level above
    // the tallest stack; y = k - 1 for stack height k. The finger at level j
    // touches plate j + 1 iff j < k.
    fn topplate_x(&self, level: usize, k: usize) -> usize {
        let n = self.params.size;
        if level == n {
            2 * n
        } else {
            2 * level + usize::from(level < k)
        }
    }

    pub fn topplate_level(&self, x: usize) -> usize {
        x / 2
    }

    fn topplate_outcome(&self, x: usize, y: usize, a: usize) -> Outcome {
        let n = self.params.size;
        let k = y + 1;
        let level = self.topplate_level(x);
        match a {
            TOPPLATE_GRASP => Outcome {
                x,
                y,
                terminal: true,
                goal: level + 1 == k,
            },
            _ => {
                let next = if a == TOPPLATE_UP { (level + 1).min(n) } else { level.saturating_sub(1) };
                Outcome {
                    x: self.topplate_x(next, k),
                    y,
                    terminal: false,
                    goal: false,
                }
            }
        }
    }

    // TwoBumps-1D: x = finger * 3 + contact, y = left * n + right.
    fn bumps1d_outcome(&self, x: usize, y: usize, a: usize) -> Outcome {
        let n = self.params.size;
        let finger = x / 3;
        let (left, right) = (y / n, y % n);
        let moving_right = a == BUMPS_RIGHT_COMPLIANT || a == BUMPS_RIGHT_STIFF;
        let stiff = a == BUMPS_LEFT_STIFF || a == BUMPS_RIGHT_STIFF;
        let target = if moving_right { finger + 1 } else { finger.wrapping_sub(1) };
        if target >= n {
            return Outcome {
                x: finger * 3 + CONTACT_NONE,
                y,
                terminal: false,
                goal: false,
            };
        }
        let on_bump = target == left || target == right;
        // Gliding over a bump deflects the trailing side of the finger.
        let contact = match (on_bump, moving_right) {
            (false, _) => CONTACT_NONE,
            (true, true) => CONTACT_LEFT,
            (true, false) => CONTACT_RIGHT,
        };
        Outcome {
            x: target * 3 + contact,
            y,
            terminal: stiff && on_bump,
            goal: stiff && moving_right && target == right,
        }
    }

    // TwoBumps-2D: x = cell * 3 + reading, y = small * n² + large.
    fn bumps2d_outcome(&self, x: usize, y: usize, a: usize) -> Outcome {
        let n = self.params.size;
        let cells = n * n;
        let cell = x / 3;
        let (small, large) = (y / cells, y % cells);
        if a == GRID_GRASP {
            return Outcome {
                x,
                y,
                terminal: true,
                goal: cell == large,
            };
        }
        let (r, c) = (cell / n, cell % n);
        let (nr, nc) = match a {
            GRID_NORTH => (r.wrapping_sub(1), c),
            GRID_SOUTH => (r + 1, c),
            GRID_EAST => (r, c + 1),
            _ => (r, c.wrapping_sub(1)),
        };
        let next = if nr < n && nc < n { nr * n + nc } else { cell };
        Outcome {
            x: next * 3 + self.grid_reading(next, small, large),
            y,
            terminal: false,
            goal: false,
        }
    }

    fn grid_reading(&self, cell: usize, small: usize, large: usize) -> usize {
        if cell == large {
            READING_LARGE
        } else if cell == small {
            READING_SMALL
        } else {
            READING_NONE
        }
    }

    /// Contact-memory bits set by arriving at `x` (TwoBumps-2D only).
    pub fn contact_bits(&self, x: usize) -> u8 {
        match self.kind {
            RobotKind::TwoBumps2D => match x % 3 {
                READING_SMALL => 1,
                READING_LARGE => 2,
                _ => 0,
            },
            _ => 0,
        }
    }

    /// Full success predicate given the memory after the transition.
    pub fn is_success(&self, outcome: &Outcome, memory: u8) -> bool {
        match self.kind {
            RobotKind::TwoBumps2D => outcome.goal && memory == 3,
            _ => outcome.goal,
        }
    }

    /// Joint start distribution as `((x, y), p)` pairs.
    pub fn start_distribution(&self) -> Vec<((usize, usize), f64)> {
        let n = self.params.size;
        let mut out = Vec::new();
        match self.kind {
            RobotKind::TopPlate => {
                for y in 0..n {
                    out.push(((self.topplate_x(0, y + 1), y), 1.0 / n as f64));
                }
            }
            RobotKind::TwoBumps1D => {
                // finger uniform; ordered bump pair uniform over cells away
                // from the finger
                let pairs = (n - 1) * (n - 2) / 2;
                let p = 1.0 / (n * pairs) as f64;
                for finger in 0..n {
                    for left in 0..n {
                        for right in left + 1..n {
                            if left != finger && right != finger {
                                out.push(((finger * 3 + CONTACT_NONE, left * n + right), p));
                            }
                        }
                    }
                }
            }
            RobotKind::TwoBumps2D => {
                let cells = n * n;
                let p = 1.0 / (cells * cells * (cells - 1)) as f64;
                for finger in 0..cells {
                    for small in 0..cells {
                        for large in 0..cells {
                            if small != large {
                                let x = finger * 3 + self.grid_reading(finger, small, large);
                                out.push(((x, small * cells + large), p));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn build_model(&self) -> MomdpModel {
        let (nx, ny, na) = (self.num_x(), self.num_y(), self.num_actions());
        let mut m = MomdpModel::new(nx, ny, na, 1);
        m.discount = self.params.discount;
        m.start = vec![0.0; nx * ny];
        for ((x, y), p) in self.start_distribution() {
            m.start[x * ny + y] += p;
        }
        for x in 0..nx {
            for y in 0..ny {
                for a in 0..na {
                    let o = self.outcome(x, y, a);
                    let reward = if o.goal { 1.0 } else { 0.0 };
                    m.set_dynamics(
                        x,
                        y,
                        a,
                        vec![XOutcome {
                            x: o.x,
                            prob: 1.0,
                            y_outcomes: vec![YOutcome {
                                y: o.y,
                                prob: 1.0,
                                reward,
                                terminal: o.terminal,
                            }],
                        }],
                    );
                    m.set_observation(x, y, a, vec![(0, 1.0)]);
                }
            }
        }
        m
    }

    /// Min-max normalized features of the observed component.
    pub fn x_features(&self, x: usize) -> Vec<f64> {
        let n = self.params.size;
        match self.kind {
            RobotKind::TopPlate => {
                let level = self.topplate_level(x);
                let contact = if level < n { (x % 2) as f64 } else { 0.0 };
                vec![level as f64 / n as f64, contact]
            }
            RobotKind::TwoBumps1D => vec![norm(x / 3, n), (x % 3) as f64 / 2.0],
            RobotKind::TwoBumps2D => {
                let cell = x / 3;
                vec![norm(cell / n, n), norm(cell % n, n), (x % 3) as f64 / 2.0]
            }
        }
    }

    /// Min-max normalized features of the hidden component.
    pub fn y_features(&self, y: usize) -> Vec<f64> {
        let n = self.params.size;
        match self.kind {
            RobotKind::TopPlate => vec![norm(y, n)],
            RobotKind::TwoBumps1D => vec![norm(y / n, n), norm(y % n, n)],
            RobotKind::TwoBumps2D => {
                let cells = n * n;
                let (s, l) = (y / cells, y % cells);
                vec![norm(s / n, n), norm(s % n, n), norm(l / n, n), norm(l % n, n)]
            }
        }
    }

    pub fn x_feature_dim(&self) -> usize {
        self.x_features(0).len()
    }

    pub fn y_feature_dim(&self) -> usize {
        self.y_features(0).len()
    }

    /// Grid shape used to display a distribution over `Y`.
    pub fn y_grid(&self) -> (usize, usize) {
        let n = self.params.size;
        match self.kind {
            RobotKind::TopPlate => (1, n),
            RobotKind::TwoBumps1D => (n, n),
            RobotKind::TwoBumps2D => (n * n, n * n),
        }
    }
}

fn norm(v: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        v as f64 / (n - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(size: usize, len: usize) -> RobotParams {
        RobotParams {
            size,
            discount: 0.99,
            max_episode_length: len,
        }
    }

    #[test]
    fn set_sizes() {
        let t = RobotDomain::new(RobotKind::TopPlate, params(10, 50));
        assert_eq!((t.num_x(), t.num_y(), t.num_actions()), (21, 10, 3));
        let b = RobotDomain::new(RobotKind::TwoBumps1D, params(15, 100));
        assert_eq!((b.num_x(), b.num_y(), b.num_actions()), (45, 225, 4));
        let g = RobotDomain::new(RobotKind::TwoBumps2D, params(4, 100));
        assert_eq!((g.num_x(), g.num_y(), g.num_actions()), (48, 256, 5));
        for d in [t, b, g] {
            d.model().validate().unwrap();
        }
    }

    #[test]
    fn topplate_grasp_rules() {
        let t = RobotDomain::new(RobotKind::TopPlate, params(10, 50));
        // k = 3: plates at levels 0, 1, 2
        let y = 2;
        let mut x = t.topplate_x(0, 3);
        for _ in 0..2 {
            x = t.outcome(x, y, TOPPLATE_UP).x;
        }
        assert_eq!(x % 2, 1);
        let grasp = t.outcome(x, y, TOPPLATE_GRASP);
        assert!(grasp.terminal && grasp.goal);
        let above = t.outcome(x, y, TOPPLATE_UP).x;
        assert_eq!(above % 2, 0);
        let miss = t.outcome(above, y, TOPPLATE_GRASP);
        assert!(miss.terminal && !miss.goal);
    }

    #[test]
    fn topplate_tenth_plate_is_identified_on_contact() {
        let t = RobotDomain::new(RobotKind::TopPlate, params(10, 50));
        let mut x = t.topplate_x(0, 10);
        for _ in 0..9 {
            x = t.outcome(x, 9, TOPPLATE_UP).x;
        }
        // level 9 with contact only happens when k = 10
        assert_eq!(x, 19);
        for y in 0..9 {
            assert_ne!(t.topplate_x(9, y + 1), 19);
        }
        assert!(t.outcome(x, 9, TOPPLATE_GRASP).goal);
    }

    #[test]
    fn bumps1d_contact_and_push() {
        let b = RobotDomain::new(RobotKind::TwoBumps1D, params(15, 100));
        let y = 4 * 15 + 9;
        let x = 3 * 3;
        let glide = b.outcome(x, y, BUMPS_RIGHT_COMPLIANT);
        assert_eq!(glide.x, 4 * 3 + CONTACT_LEFT);
        assert!(!glide.terminal);
        let wrong = b.outcome(x, y, BUMPS_RIGHT_STIFF);
        assert!(wrong.terminal && !wrong.goal);
        let right = b.outcome(8 * 3, y, BUMPS_RIGHT_STIFF);
        assert!(right.terminal && right.goal);
        let back = b.outcome(10 * 3, y, BUMPS_LEFT_STIFF);
        assert!(back.terminal && !back.goal);
        let wall = b.outcome(0, y, BUMPS_LEFT_STIFF);
        assert_eq!(wall, Outcome { x: 0, y, terminal: false, goal: false });
    }

    #[test]
    fn bumps2d_success_needs_both_contacts() {
        let g = RobotDomain::new(RobotKind::TwoBumps2D, params(4, 100));
        let (small, large) = (1, 2);
        let y = small * 16 + large;
        let at_large = large * 3 + READING_LARGE;
        let grasp = g.outcome(at_large, y, GRID_GRASP);
        assert!(grasp.terminal && grasp.goal);
        assert!(!g.is_success(&grasp, 2));
        assert!(g.is_success(&grasp, 3));
        let from_small = g.outcome(small * 3 + READING_SMALL, y, GRID_EAST);
        assert_eq!(from_small.x, at_large);
        assert_eq!(g.contact_bits(from_small.x), 2);
        let empty = g.outcome(5 * 3, y, GRID_GRASP);
        assert!(empty.terminal && !empty.goal);
    }

    #[test]
    fn features_are_normalized() {
        for (kind, size) in [(RobotKind::TopPlate, 10), (RobotKind::TwoBumps1D, 15), (RobotKind::TwoBumps2D, 4)] {
            let d = RobotDomain::new(kind, params(size, 10));
            for x in 0..d.num_x() {
                assert!(d.x_features(x).iter().all(|v| (0.0..=1.0).contains(v)));
            }
            for y in 0..d.num_y() {
                assert!(d.y_features(y).iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
