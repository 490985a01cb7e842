#![allow(dead_code)]

use bgn::belief::{MomdpModel, XOutcome, YOutcome};
use bgn::pomdp::PomdpModel;
use rand::Rng;

/// Probability vector with roughly a third of the entries exactly zero.
pub fn sparse_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.35 { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        let z: f64 = w.iter().sum();
        if z > 0.0 {
            return w.iter().map(|x| x / z).collect();
        }
    }
}

pub fn random_model<R: Rng>(max_s: usize, max_a: usize, max_o: usize, rng: &mut R) -> PomdpModel {
    let (ns, na, no) = (rng.random_range(1..=max_s), rng.random_range(1..=max_a), rng.random_range(1..=max_o));
    let mut m = PomdpModel::new(ns, na, no);
    m.start = sparse_simplex(ns, rng);
    for s in 0..ns {
        for a in 0..na {
            for (t, p) in sparse_simplex(ns, rng).into_iter().enumerate() {
                m.set_transition(s, a, t, p);
            }
            for (o, p) in sparse_simplex(no, rng).into_iter().enumerate() {
                m.set_observation(s, a, o, p);
            }
        }
    }
    m
}

pub fn random_factored<R: Rng>(max_x: usize, max_y: usize, rng: &mut R) -> MomdpModel {
    let (nx, ny) = (rng.random_range(1..=max_x), rng.random_range(1..=max_y));
    let (na, no) = (rng.random_range(1..=2), rng.random_range(1..=3));
    let mut m = MomdpModel::new(nx, ny, na, no);
    m.start = sparse_simplex(nx * ny, rng);
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                let mut outcomes = Vec::new();
                for (x2, px) in sparse_simplex(nx, rng).into_iter().enumerate() {
                    if px == 0.0 {
                        continue;
                    }
                    let ys = sparse_simplex(ny, rng)
                        .into_iter()
                        .enumerate()
                        .filter(|p| p.1 > 0.0)
                        .map(|(y2, prob)| YOutcome {
                            y: y2,
                            prob,
                            reward: 0.0,
                            terminal: false,
                        })
                        .collect();
                    outcomes.push(XOutcome {
                        x: x2,
                        prob: px,
                        y_outcomes: ys,
                    });
                }
                m.set_dynamics(x, y, a, outcomes);
                let obs = sparse_simplex(no, rng).into_iter().enumerate().filter(|p| p.1 > 0.0).collect();
                m.set_observation(x, y, a, obs);
            }
        }
    }
    m
}

/// Posterior over the final state given an action/observation history, by
/// summing the joint probability of every complete state sequence.
/// `None` when the history has probability zero.
pub fn posterior_by_sequences(m: &PomdpModel, history: &[(usize, usize)]) -> Option<Vec<f64>> {
    let ns = m.num_states();
    let len = history.len() + 1;
    let total_seqs = ns.pow(len as u32);
    let mut post = vec![0.0; ns];
    let mut seq = vec![0usize; len];
    for code in 0..total_seqs {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % ns;
            c /= ns;
        }
        let mut p = m.start[seq[0]];
        for (i, &(a, o)) in history.iter().enumerate() {
            if p == 0.0 {
                break;
            }
            p *= m.transition(seq[i], a, seq[i + 1]) * m.observation(seq[i + 1], a, o);
        }
        post[seq[len - 1]] += p;
    }
    let z: f64 = post.iter().sum();
    (z > 0.0).then(|| post.iter().map(|p| p / z).collect())
}

/// Best start-distribution value over all deterministic state-feedback
/// policies, each evaluated by Bellman iteration.
pub fn best_deterministic_policy_value(m: &PomdpModel) -> f64 {
    let ns = m.num_states();
    let na = m.num_actions();
    let mut best = f64::NEG_INFINITY;
    for code in 0..na.pow(ns as u32) {
        let policy: Vec<usize> = (0..ns).map(|s| (code / na.pow(s as u32)) % na).collect();
        let mut v = vec![0.0; ns];
        for _ in 0..2000 {
            let next: Vec<f64> = (0..ns)
                .map(|s| {
                    let a = policy[s];
                    (0..ns)
                        .map(|t| {
                            let p = m.transition(s, a, t);
                            let cont = if m.is_terminal(s, a, t) { 0.0 } else { m.discount * v[t] };
                            p * (m.reward(s, a, t, t) + cont)
                        })
                        .sum()
                })
                .collect();
            v = next;
        }
        let value: f64 = m.start.iter().zip(&v).map(|(p, v)| p * v).sum();
        best = best.max(value);
    }
    best
}

/// Largest relative error between tape gradients of `build` and central
/// differences of step `h`, and the largest absolute error over entries
/// where both are below 1e-6 (excluded from the relative error).
pub fn gradient_errors<F>(params: &bgn::tensor::ParamSet, h: f64, build: F) -> (f64, f64)
where
    F: Fn(&mut bgn::tensor::Tape) -> bgn::tensor::Var,
{
    use bgn::tensor::Tape;
    let grads = {
        let mut tape = Tape::new(params);
        let loss = build(&mut tape);
        tape.backward(loss).unwrap()
    };
    let value = |ps: &bgn::tensor::ParamSet| {
        let mut tape = Tape::new(ps);
        let loss = build(&mut tape);
        tape.scalar(loss)
    };
    let (mut worst, mut small) = (0.0f64, 0.0f64);
    let mut perturbed = params.clone();
    for id in params.ids() {
        let (rows, cols) = params.get(id).dim();
        for i in 0..rows {
            for j in 0..cols {
                let x = params.get(id)[[i, j]];
                perturbed.get_mut(id)[[i, j]] = x + h;
                let up = value(&perturbed);
                perturbed.get_mut(id)[[i, j]] = x - h;
                let down = value(&perturbed);
                perturbed.get_mut(id)[[i, j]] = x;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.get(id).map_or(0.0, |g| g[[i, j]]);
                let scale = numeric.abs().max(analytic.abs());
                if scale > 1e-6 {
                    worst = worst.max((numeric - analytic).abs() / scale);
                } else {
                    small = small.max((numeric - analytic).abs());
                }
            }
        }
    }
    (worst, small)
}

/// A recorded segment of a small Ah-Ch+BGN agent on the toy domain, with
/// random initial recurrent state so every parameter carries gradient.
pub struct ToyLossProblem {
    pub nets: bgn::agent::AgentNets,
    pub rollout: bgn::trainer::Rollout,
    pub returns: Vec<Vec<f64>>,
}

pub fn toy_loss_problem(seed: u64) -> ToyLossProblem {
    use bgn::agent::{build_agent, AgentVariant, NetworkConfig};
    use bgn::env::{Domain, DomainId};
    use bgn::trainer::{collect_segment, Workers};
    use rand::SeedableRng;
    use std::sync::Arc;

    let domain = Arc::new(Domain::builtin(DomainId::Toy).unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = NetworkConfig {
        hidden: 5,
        embedding: 3,
        head_init_scale: 1.0,
    };
    let mut nets = build_agent(AgentVariant::AH_CH_BGN, &domain, cfg, 2, &mut rng);
    for h in [&mut nets.actor_hidden, &mut nets.critic_hidden] {
        h.mapv_inplace(|_| rng.random_range(-0.8..0.8));
    }
    let mut workers = Workers::new(&domain, &[seed, seed + 1], domain.discount(), false);
    let rollout = {
        let mut tape = bgn::tensor::Tape::new(&nets.params);
        let placed = nets.place(&mut tape).unwrap();
        collect_segment(&mut tape, &nets, &placed, &mut workers, 7, &mut rng).unwrap().0
    };
    let returns = rollout.returns(domain.discount(), 0.95);
    ToyLossProblem { nets, rollout, returns }
}

impl ToyLossProblem {
    /// Full loss with the batch held fixed, rebuilt on `tape`.
    pub fn loss(&self, tape: &mut bgn::tensor::Tape) -> bgn::tensor::Var {
        use bgn::trainer::{a2c_losses, bgn_augment, replay_segment};
        let placed = self.nets.place(tape).unwrap();
        let mut r = self.rollout.clone();
        r.vars = replay_segment(tape, &self.nets, &placed, &self.rollout).unwrap();
        let g = a2c_losses(tape, &r, &self.returns, 0.5, 0.01).unwrap();
        bgn_augment(tape, g, &r).unwrap().total
    }
}

/// Calls `visit(history, posterior)` for every positive-probability
/// action/observation history up to `depth`. Posteriors come from explicit
/// lists of state paths, each weighted by its joint probability.
pub fn for_each_history(m: &PomdpModel, depth: usize, visit: &mut dyn FnMut(&[(usize, usize)], &[f64])) {
    fn go(
        m: &PomdpModel,
        paths: &[(Vec<usize>, f64)],
        history: &mut Vec<(usize, usize)>,
        depth: usize,
        visit: &mut dyn FnMut(&[(usize, usize)], &[f64]),
    ) {
        if depth == 0 {
            return;
        }
        for a in 0..m.num_actions() {
            for o in 0..m.num_observations() {
                let mut next = Vec::new();
                for (path, w) in paths {
                    let s = *path.last().unwrap();
                    for s2 in 0..m.num_states() {
                        let p = w * m.transition(s, a, s2) * m.observation(s2, a, o);
                        if p > 0.0 {
                            let mut longer = path.clone();
                            longer.push(s2);
                            next.push((longer, p));
                        }
                    }
                }
                if next.is_empty() {
                    continue;
                }
                let z: f64 = next.iter().map(|p| p.1).sum();
                let mut post = vec![0.0; m.num_states()];
                for (path, w) in &next {
                    post[*path.last().unwrap()] += w / z;
                }
                history.push((a, o));
                visit(history, &post);
                go(m, &next, history, depth - 1, visit);
                history.pop();
            }
        }
    }
    let paths: Vec<(Vec<usize>, f64)> = m.start.iter().enumerate().filter(|p| *p.1 > 0.0).map(|(s, &p)| (vec![s], p)).collect();
    go(m, &paths, &mut Vec::new(), depth, visit);
}

/// Joint-state model of a factored model: state `x·|Y| + y`, observation
/// `x'·|Ω| + o`.
pub fn joint_model(m: &MomdpModel) -> PomdpModel {
    let (nx, ny, na, no) = (m.num_x(), m.num_y(), m.num_actions(), m.num_observations());
    let mut flat = PomdpModel::new(nx * ny, na, nx * no);
    flat.start = m.start.clone();
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                let mut row = vec![0.0; nx * ny];
                for xo in m.dynamics(x, y, a) {
                    for yo in &xo.y_outcomes {
                        row[xo.x * ny + yo.y] += xo.prob * yo.prob;
                    }
                }
                for (s2, p) in row.into_iter().enumerate() {
                    flat.set_transition(x * ny + y, a, s2, p);
                }
            }
        }
    }
    for x2 in 0..nx {
        for y2 in 0..ny {
            for a in 0..na {
                for o in 0..no {
                    flat.set_observation(x2 * ny + y2, a, x2 * no + o, m.observation(x2, y2, a, o));
                }
            }
        }
    }
    flat
}
