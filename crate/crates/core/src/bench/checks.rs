//! Self-checks run by `bgn check`: filters against brute-force Bayes,
//! gradients against finite differences, and the bundled reference numbers.

use super::{normalized_return, REFERENCE_RETURNS};
use crate::agent::{build_agent, AgentNets, AgentVariant, NetworkConfig};
use crate::belief::{belief_update, flatten_momdp, momdp_belief_update, Belief, MomdpBelief, MomdpModel, XOutcome, YOutcome};
use crate::env::{Domain, DomainId};
use crate::pomdp::PomdpModel;
use crate::tensor::gradcheck::{check_gradients, GradCheckReport, SMALL_GRADIENT};
use crate::tensor::{Tape, TensorError, Var};
use crate::trainer::{
    a2c_losses, bgn_augment, collect_segment, entropy_coefficient, lambda_returns, replay_segment, Rollout, StepEnd,
    TrainError, Workers,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Random row-stochastic weights with some exact zeros.
fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Random tabular model with at most the given sizes.
pub fn random_pomdp<R: Rng>(max_states: usize, max_actions: usize, max_observations: usize, rng: &mut R) -> PomdpModel {
    let ns = rng.random_range(1..=max_states);
    let na = rng.random_range(1..=max_actions);
    let no = rng.random_range(1..=max_observations);
    let mut m = PomdpModel::new(ns, na, no);
    m.start = random_distribution(ns, rng);
    for a in 0..na {
        for s in 0..ns {
            for (next, p) in random_distribution(ns, rng).into_iter().enumerate() {
                m.set_transition(s, a, next, p);
            }
        }
        for next in 0..ns {
            for (o, p) in random_distribution(no, rng).into_iter().enumerate() {
                m.set_observation(next, a, o, p);
            }
        }
    }
    m
}

/// Random factored model with at most the given sizes.
pub fn random_momdp<R: Rng>(max_x: usize, max_y: usize, rng: &mut R) -> MomdpModel {
    let nx = rng.random_range(1..=max_x);
    let ny = rng.random_range(1..=max_y);
    let na = rng.random_range(1..=3);
    let no = rng.random_range(1..=3);
    let mut m = MomdpModel::new(nx, ny, na, no);
    m.start = random_distribution(nx * ny, rng);
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                let px = random_distribution(nx, rng);
                let outcomes = px
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(nx_, prob)| XOutcome {
                        x: nx_,
                        prob,
                        y_outcomes: random_distribution(ny, rng)
                            .into_iter()
                            .enumerate()
                            .filter(|(_, p)| *p > 0.0)
                            .map(|(y, prob)| YOutcome {
                                y,
                                prob,
                                reward: 0.0,
                                terminal: false,
                            })
                            .collect(),
                    })
                    .collect();
                m.set_dynamics(x, y, a, outcomes);
                let obs = random_distribution(no, rng).into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect();
                m.set_observation(x, y, a, obs);
            }
        }
    }
    m
}

/// Compares iterated filter updates with the posterior obtained by summing
/// over every state path, on all positive-probability histories up to
/// `depth`. Returns the largest deviation and the number of histories.
pub fn filter_vs_enumeration(model: &PomdpModel, depth: usize) -> (f64, usize) {
    // paths as (last state, joint weight) without merging equal states
    fn walk(m: &PomdpModel, paths: &[(usize, f64)], belief: &Belief, depth: usize, worst: &mut f64, count: &mut usize) {
        if depth == 0 {
            return;
        }
        for a in 0..m.num_actions() {
            for o in 0..m.num_observations() {
                let mut next = Vec::new();
                for &(s, w) in paths {
                    for s2 in 0..m.num_states() {
                        let p = w * m.transition(s, a, s2) * m.observation(s2, a, o);
                        if p > 0.0 {
                            next.push((s2, p));
                        }
                    }
                }
                let total: f64 = next.iter().map(|p| p.1).sum();
                if total <= 0.0 {
                    continue;
                }
                let mut post = vec![0.0; m.num_states()];
                for &(s, w) in &next {
                    post[s] += w / total;
                }
                let b = belief_update(m, belief, a, o).expect("positive-probability history");
                *count += 1;
                for (p, q) in post.iter().zip(b.probs()) {
                    *worst = worst.max((p - q).abs());
                }
                walk(m, &next, &b, depth - 1, worst, count);
            }
        }
    }
    let paths: Vec<(usize, f64)> = model.start.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
    let b0 = Belief::new(model.start.clone()).expect("start is a distribution");
    let (mut worst, mut count) = (0.0, 0);
    walk(model, &paths, &b0, depth, &mut worst, &mut count);
    (worst, count)
}

/// Compares the factored update with the flat update of the flattened
/// model on all positive-probability histories up to `depth`.
pub fn momdp_vs_flat(model: &MomdpModel, depth: usize) -> (f64, usize) {
    let flat = flatten_momdp(model);
    let (nx, ny, no) = (model.num_x(), model.num_y(), model.num_observations());
    fn embed(b: &MomdpBelief, ny: usize, nx: usize) -> Vec<f64> {
        let mut v = vec![0.0; nx * ny];
        v[b.x * ny..(b.x + 1) * ny].copy_from_slice(b.hidden.probs());
        v
    }
    #[allow(clippy::too_many_arguments)]
    fn walk(
        m: &MomdpModel,
        flat: &PomdpModel,
        fb: &MomdpBelief,
        sb: &Belief,
        depth: usize,
        dims: (usize, usize, usize),
        worst: &mut f64,
        count: &mut usize,
    ) {
        if depth == 0 {
            return;
        }
        let (nx, ny, no) = dims;
        for a in 0..m.num_actions() {
            for x2 in 0..nx {
                for o in 0..no {
                    let Ok(f2) = momdp_belief_update(m, fb, a, x2, o) else {
                        assert!(belief_update(flat, sb, a, x2 * no + o).is_err(), "flat accepts a history the factored filter rejects");
                        continue;
                    };
                    let s2 = belief_update(flat, sb, a, x2 * no + o).expect("factored filter accepted");
                    *count += 1;
                    for (p, q) in embed(&f2, ny, nx).iter().zip(s2.probs()) {
                        *worst = worst.max((p - q).abs());
                    }
                    walk(m, flat, &f2, &s2, depth - 1, dims, worst, count);
                }
            }
        }
    }
    let (mut worst, mut count) = (0.0, 0);
    for x in 0..nx {
        let Some(fb) = MomdpBelief::initial(model, x) else { continue };
        let sb = Belief::new(embed(&fb, ny, nx)).expect("embedded belief is normalized");
        walk(model, &flat, &fb, &sb, depth, (nx, ny, no), &mut worst, &mut count);
    }
    (worst, count)
}

/// Records one segment of an Ah-Ch+BGN agent on the toy domain, then
/// finite-differences the full loss with the batch held fixed.
pub fn toy_loss_gradient_check(seed: u64) -> Result<GradCheckReport, TrainError> {
    let domain = Arc::new(Domain::builtin(DomainId::Toy)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = NetworkConfig {
        hidden: 6,
        embedding: 4,
        head_init_scale: 1.0,
    };
    let workers_n = 3;
    let mut nets: AgentNets = build_agent(AgentVariant::AH_CH_BGN, &domain, config, workers_n, &mut rng);
    for h in [&mut nets.actor_hidden, &mut nets.critic_hidden] {
        h.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let seeds: Vec<u64> = (0..workers_n as u64).collect();
    let mut workers = Workers::new(&domain, &seeds, domain.discount(), false);
    let rollout: Rollout = {
        let mut tape = Tape::new(&nets.params);
        let placed = nets.place(&mut tape)?;
        collect_segment(&mut tape, &nets, &placed, &mut workers, 6, &mut rng)?.0
    };
    let returns = rollout.returns(domain.discount(), 0.95);
    let build = |tape: &mut Tape| -> Result<Var, TensorError> {
        let run = |tape: &mut Tape| -> Result<Var, TrainError> {
            let placed = nets.place(tape)?;
            let mut r = rollout.clone();
            r.vars = replay_segment(tape, &nets, &placed, &rollout)?;
            let g = a2c_losses(tape, &r, &returns, 0.5, 0.01)?;
            Ok(bgn_augment(tape, g, &r)?.total)
        };
        run(tape).map_err(|e| match e {
            TrainError::Tensor(t) => t,
            other => TensorError::ShapeMismatch(other.to_string()),
        })
    };
    Ok(check_gradients(&nets.params, 1e-5, build)?)
}

/// Largest deviations of λ = 0 and λ = 1 from their closed forms and of the
/// λ-return advantages from the GAE sum, over random segments.
pub fn lambda_return_errors(segments: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut limits, mut gae) = (0.0f64, 0.0f64);
    for _ in 0..segments {
        let n = rng.random_range(1..=8);
        let gamma = rng.random_range(0.5..1.0);
        let lambda = rng.random::<f64>();
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let boot = rng.random_range(-1.0..1.0);
        let ends = vec![StepEnd::Continue; n];
        let td = lambda_returns(&r, &v, &ends, boot, gamma, 0.0);
        let mc = lambda_returns(&r, &v, &ends, boot, gamma, 1.0);
        for t in 0..n {
            let next_v = if t + 1 < n { v[t + 1] } else { boot };
            limits = limits.max((td[t] - (r[t] + gamma * next_v)).abs());
            let mut g = gamma.powi((n - t) as i32) * boot;
            for (k, rk) in r[t..].iter().enumerate() {
                g += gamma.powi(k as i32) * rk;
            }
            limits = limits.max((mc[t] - g).abs());
        }
        let lr = lambda_returns(&r, &v, &ends, boot, gamma, lambda);
        let delta: Vec<f64> = (0..n).map(|t| r[t] + gamma * if t + 1 < n { v[t + 1] } else { boot } - v[t]).collect();
        for t in 0..n {
            let adv: f64 = (t..n).map(|k| (gamma * lambda).powi((k - t) as i32) * delta[k]).sum();
            gae = gae.max((lr[t] - v[t] - adv).abs());
        }
    }
    (limits, gae)
}

/// Normalized reference table, rows in [`REFERENCE_RETURNS`] order.
pub fn normalized_reference_table() -> Vec<(&'static str, Vec<(&'static str, f64)>)> {
    REFERENCE_RETURNS
        .iter()
        .map(|r| {
            let cells = r
                .agents
                .iter()
                .map(|&(v, raw)| (v, normalized_return(raw, r.sarsop, r.random).expect("distinct references")))
                .collect();
            (r.domain, cells)
        })
        .collect()
}

/// Runs every self-check with moderate sample sizes.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let (mut worst, mut histories) = (0.0f64, 0);
    for _ in 0..50 {
        let (w, n) = filter_vs_enumeration(&random_pomdp(6, 3, 4, &mut rng), 4);
        worst = worst.max(w);
        histories += n;
    }
    out.push(result("belief filter vs enumeration", worst <= 1e-10, format!("max |Δ| {worst:.2e} over {histories} histories")));

    let (mut worst, mut histories) = (0.0f64, 0);
    for _ in 0..20 {
        let (w, n) = momdp_vs_flat(&random_momdp(4, 5, &mut rng), 3);
        worst = worst.max(w);
        histories += n;
    }
    out.push(result("factored vs flat filter", worst <= 1e-9, format!("max |Δ| {worst:.2e} over {histories} histories")));

    match toy_loss_gradient_check(7) {
        Ok(r) => out.push(result(
            "full loss gradient",
            r.max_relative_error <= 1e-4 && r.max_small_abs_error <= 1e-9,
            format!(
                "max relative error {:.2e} over {} entries, max absolute error {:.2e} on entries below {:.0e}",
                r.max_relative_error, r.entries_checked, r.max_small_abs_error, SMALL_GRADIENT
            ),
        )),
        Err(e) => out.push(result("full loss gradient", false, e.to_string())),
    }

    let (limits, gae) = lambda_return_errors(500, 11);
    out.push(result(
        "lambda-return limits and GAE",
        limits <= 1e-12 && gae <= 1e-10,
        format!("limits {limits:.1e}, GAE {gae:.1e}"),
    ));

    let table = normalized_reference_table();
    let finite = table.iter().all(|(_, cells)| cells.iter().all(|(_, v)| v.is_finite()));
    out.push(result("normalized reference table", finite, format!("{} domains", table.len())));

    let mut ok = true;
    let mut detail = Vec::new();
    for id in DomainId::ALL {
        match Domain::builtin(id) {
            Ok(d) => {
                let desc = d.describe();
                if let Some(r) = id.reference_sizes() {
                    ok &= desc.a == r.actions && desc.gamma == r.discount && desc.max_episode_length == r.max_episode_length;
                }
                detail.extend(desc.deviations.iter().map(|dev| format!("{id}: {dev}")));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("{id}: {e}"));
            }
        }
    }
    out.push(result("domain conformance", ok, detail.join("; ")));

    let ok = entropy_coefficient(0, DomainId::RockSample44) == 2.0
        && entropy_coefficient(3_000_000, DomainId::RockSample44) == 0.2
        && entropy_coefficient(123, DomainId::Hallway) == 0.01;
    out.push(result("entropy schedule", ok, String::new()));
    out
}
