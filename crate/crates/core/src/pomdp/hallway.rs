//! Generator for the Hallway navigation benchmark.
//!
//! An 11-cell east-west corridor with four one-cell alcoves on its south
//! side (below corridor columns 2, 4, 6 and 8). The goal is the alcove below
//! column 6 and is a single absorbing state; every other open cell has four
//! headings, giving 14 * 4 + 1 = 57 states. The three remaining alcoves carry
//! landmarks that the agent sees when it faces south inside them.
//!
//! Observations 0..16 encode the wall pattern relative to the heading
//! (`front * 8 + right * 4 + back * 2 + left`), 16..19 are the landmarks and
//! 19 is the goal.

use super::model::PomdpModel;

const WIDTH: i32 = 11;
const ALCOVES: [i32; 4] = [2, 4, 6, 8];
const GOAL_COLUMN: i32 = 6;

pub const NUM_OBSERVATIONS: usize = 20;
pub const GOAL_OBSERVATION: usize = 19;

/// Per-bit probability that a wall reading is flipped.
pub const WALL_NOISE: f64 = 0.05;
/// Probability that a landmark is recognised when facing it.
pub const LANDMARK_ACCURACY: f64 = 0.9;

const HEADINGS: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)]; // N E S W, y grows south

fn open(x: i32, y: i32) -> bool {
    (y == 0 && (0..WIDTH).contains(&x)) || (y == 1 && ALCOVES.contains(&x))
}

fn locations() -> Vec<(i32, i32)> {
    let mut cells: Vec<(i32, i32)> = (0..WIDTH).map(|x| (x, 0)).collect();
    cells.extend(ALCOVES.iter().filter(|&&x| x != GOAL_COLUMN).map(|&x| (x, 1)));
    cells
}

pub fn generate_hallway() -> PomdpModel {
    let cells = locations();
    let ns = cells.len() * 4 + 1;
    let goal = ns - 1;
    let na = 5;
    let mut m = PomdpModel::new(ns, na, NUM_OBSERVATIONS);
    m.discount = 0.95;
    m.action_names = Some(
        ["stay", "forward", "right", "left", "around"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );

    let index = |x: i32, y: i32, h: usize| -> usize {
        if x == GOAL_COLUMN && y == 1 {
            return goal;
        }
        let c = cells.iter().position(|&c| c == (x, y)).expect("open cell");
        c * 4 + h
    };

    m.start = vec![1.0 / (ns - 1) as f64; ns];
    m.start[goal] = 0.0;

    for (ci, &(x, y)) in cells.iter().enumerate() {
        for h in 0..4 {
            let s = ci * 4 + h;
            let step = |dir: usize| -> usize {
                let (dx, dy) = HEADINGS[dir];
                if open(x + dx, y + dy) {
                    index(x + dx, y + dy, h)
                } else {
                    s
                }
            };
            let turn = |k: usize| index(x, y, (h + k) % 4);
            let outcomes: Vec<(usize, f64)> = vec![
                vec![(s, 1.0)],
                vec![(step(h), 0.8), (s, 0.1), (step((h + 1) % 4), 0.05), (step((h + 3) % 4), 0.05)],
                vec![(turn(1), 0.8), (s, 0.1), (turn(2), 0.1)],
                vec![(turn(3), 0.8), (s, 0.1), (turn(2), 0.1)],
                vec![(turn(2), 0.8), (turn(1), 0.1), (turn(3), 0.1)],
            ]
            .into_iter()
            .enumerate()
            .flat_map(|(a, row)| row.into_iter().map(move |(n, p)| (a * ns + n, p)))
            .collect();
            for (key, p) in outcomes {
                let (a, n) = (key / ns, key % ns);
                let cur = m.transition(s, a, n);
                m.set_transition(s, a, n, cur + p);
            }
            for a in 0..na {
                let dist = observation_distribution(x, y, h);
                for (o, p) in dist.into_iter().enumerate() {
                    m.set_observation(s, a, o, p);
                }
                if m.transition(s, a, goal) > 0.0 {
                    for o in 0..NUM_OBSERVATIONS {
                        m.set_reward(s, a, goal, o, 1.0);
                    }
                    m.set_terminal(s, a, goal, true);
                }
            }
        }
    }
    for a in 0..na {
        m.set_transition(goal, a, goal, 1.0);
        m.set_observation(goal, a, GOAL_OBSERVATION, 1.0);
    }
    m
}

fn observation_distribution(x: i32, y: i32, h: usize) -> Vec<f64> {
    let wall = |k: usize| -> bool {
        let (dx, dy) = HEADINGS[(h + k) % 4];
        !open(x + dx, y + dy)
    };
    let truth = [wall(0), wall(1), wall(2), wall(3)];
    let mut dist = vec![0.0; NUM_OBSERVATIONS];
    for pattern in 0..16usize {
        let bits = [pattern & 8 != 0, pattern & 4 != 0, pattern & 2 != 0, pattern & 1 != 0];
        dist[pattern] = bits
            .iter()
            .zip(truth)
            .map(|(&b, t)| if b == t { 1.0 - WALL_NOISE } else { WALL_NOISE })
            .product();
    }
    let landmark = ALCOVES
        .iter()
        .filter(|&&c| c != GOAL_COLUMN)
        .position(|&c| y == 1 && c == x);
    if let (Some(l), 2) = (landmark, h) {
        for p in dist.iter_mut() {
            *p *= 1.0 - LANDMARK_ACCURACY;
        }
        dist[16 + l] = LANDMARK_ACCURACY;
    }
    dist
}
