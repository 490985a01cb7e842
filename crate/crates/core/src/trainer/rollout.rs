use super::{EpisodeRecord, StepEnd, TrainError};
use crate::agent::{net_step, sample_action, AgentError, AgentNets, PlacedAgent};
use crate::env::{Domain, Encoded, Env, InputSource, StepResult};
use crate::tensor::{Matrix, Tape, Var};
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Default)]
struct EpisodeStats {
    ret: f64,
    weight: f64,
    length: usize,
}

/// The parallel environments and their episode bookkeeping.
#[derive(Debug, Clone)]
pub struct Workers {
    envs: Vec<Env>,
    stats: Vec<EpisodeStats>,
    gamma: f64,
    parallel: bool,
    env_steps: u64,
    episodes: u64,
}

impl Workers {
    /// One environment per seed, all freshly reset.
    pub fn new(domain: &Arc<Domain>, seeds: &[u64], gamma: f64, parallel: bool) -> Self {
        let envs = seeds
            .iter()
            .map(|&s| {
                let mut e = Env::new(Arc::clone(domain), s);
                e.reset();
                e
            })
            .collect::<Vec<_>>();
        let start = EpisodeStats {
            weight: 1.0,
            ..Default::default()
        };
        Workers {
            stats: vec![start; envs.len()],
            envs,
            gamma,
            parallel,
            env_steps: 0,
            episodes: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn env(&self, w: usize) -> &Env {
        &self.envs[w]
    }

    /// Environment steps taken over all workers.
    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn encode(&self, source: InputSource) -> Vec<Encoded> {
        self.envs.iter().map(|e| e.encode(source)).collect()
    }

    /// Exact beliefs of all workers as rows.
    pub fn beliefs(&self) -> Matrix {
        let width = self.envs[0].belief().probs().len();
        let mut m = Array2::zeros((self.envs.len(), width));
        for (mut row, e) in m.rows_mut().into_iter().zip(&self.envs) {
            row.assign(&ndarray::aview1(e.belief().probs()));
        }
        m
    }

    /// Steps every worker once without resetting finished episodes.
    fn step(&mut self, actions: &[usize]) -> Result<Vec<StepResult>, TrainError> {
        let results: Result<Vec<_>, _> = if self.parallel {
            self.envs.par_iter_mut().zip(actions).map(|(e, &a)| e.step(a)).collect()
        } else {
            self.envs.iter_mut().zip(actions).map(|(e, &a)| e.step(a)).collect()
        };
        let results = results?;
        self.env_steps += self.envs.len() as u64;
        Ok(results)
    }

    /// Accumulates rewards and resets finished workers, returning one record
    /// per completed episode.
    fn finish(&mut self, results: &[StepResult]) -> Vec<EpisodeRecord> {
        let mut out = Vec::new();
        for (w, r) in results.iter().enumerate() {
            let s = &mut self.stats[w];
            s.ret += s.weight * r.reward;
            s.weight *= self.gamma;
            s.length += 1;
            if r.done() {
                out.push(EpisodeRecord {
                    episode: self.episodes,
                    env_steps: self.env_steps,
                    ret: s.ret,
                    success: r.success,
                    length: s.length,
                });
                self.episodes += 1;
                *s = EpisodeStats {
                    weight: 1.0,
                    ..Default::default()
                };
                self.envs[w].reset();
            }
        }
        out
    }

    /// Steps every worker with `actions`, resets finished episodes and
    /// returns the transitions with the finished-episode records.
    pub fn advance(&mut self, actions: &[usize]) -> Result<(Vec<StepResult>, Vec<EpisodeRecord>), TrainError> {
        let results = self.step(actions)?;
        let episodes = self.finish(&results);
        Ok((results, episodes))
    }
}

/// Tape nodes recorded per step of a segment.
#[derive(Debug, Clone, Default)]
pub struct SegmentVars {
    /// `workers × |A|` policies.
    pub policy: Vec<Var>,
    /// `workers × 1` values.
    pub value: Vec<Var>,
    pub actor_belief: Vec<Var>,
    pub critic_belief: Vec<Var>,
}

/// One synchronous segment of experience, indexed `[t][worker]`.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub num_workers: usize,
    pub length: usize,
    pub actor_inputs: Vec<Vec<Encoded>>,
    pub critic_inputs: Vec<Vec<Encoded>>,
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub log_probs: Vec<Vec<f64>>,
    pub entropies: Vec<Vec<f64>>,
    pub ends: Vec<Vec<StepEnd>>,
    /// Exact beliefs (`workers × |B|` per step) when the variant uses them.
    pub beliefs: Option<Vec<Matrix>>,
    pub actor_beliefs: Option<Vec<Matrix>>,
    pub critic_beliefs: Option<Vec<Matrix>>,
    /// Critic value at each worker's input after the last step.
    pub bootstrap: Vec<f64>,
    pub vars: SegmentVars,
    /// Recurrent state at the start of the segment.
    pub initial_actor_hidden: Matrix,
    pub initial_critic_hidden: Matrix,
    /// Recurrent state to carry into the next segment.
    pub actor_hidden: Matrix,
    pub critic_hidden: Matrix,
}

impl Rollout {
    /// Per-worker series of step `t` values, transposed to `[worker][t]`.
    pub fn worker_series<T: Copy>(&self, per_step: &[Vec<T>], w: usize) -> Vec<T> {
        per_step.iter().map(|row| row[w]).collect()
    }

    /// λ-returns for every step, indexed `[t][worker]`.
    pub fn returns(&self, gamma: f64, lambda: f64) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.num_workers]; self.length];
        for w in 0..self.num_workers {
            let r = super::lambda_returns(
                &self.worker_series(&self.rewards, w),
                &self.worker_series(&self.values, w),
                &self.worker_series(&self.ends, w),
                self.bootstrap[w],
                gamma,
                lambda,
            );
            for (t, v) in r.into_iter().enumerate() {
                out[t][w] = v;
            }
        }
        out
    }
}

fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    m.select(ndarray::Axis(0), rows)
}

/// Zeroes the rows of finished workers.
fn mask_done(tape: &mut Tape, h: Var, done: &[bool]) -> Result<Var, TrainError> {
    if !done.iter().any(|&d| d) {
        return Ok(h);
    }
    let width = tape.value(h).ncols();
    let mut mask = Array2::ones((done.len(), width));
    for (w, _) in done.iter().enumerate().filter(|(_, &d)| d) {
        mask.row_mut(w).fill(0.0);
    }
    Ok(tape.mul_const(h, mask)?)
}

/// Runs every worker for `length` steps, recording the forward passes on
/// `tape`.
///
/// Actions are sampled in worker order from `rng`. A worker whose episode
/// ends mid-segment continues from a fresh episode with zeroed recurrent
/// state. Truncated steps carry the critic's value of the last observation,
/// computed with the recurrent state continued.
pub fn collect_segment<R: Rng + ?Sized>(
    tape: &mut Tape,
    nets: &AgentNets,
    placed: &PlacedAgent,
    workers: &mut Workers,
    length: usize,
    rng: &mut R,
) -> Result<(Rollout, Vec<EpisodeRecord>), TrainError> {
    let actor = nets.actor.as_ref().ok_or(AgentError::NoNetworks)?;
    let critic = nets.critic.as_ref().ok_or(AgentError::NoNetworks)?;
    let n = workers.len();
    if nets.num_workers() != n {
        return Err(TrainError::Config(format!(
            "agent has state for {} workers but {n} environments were given",
            nets.num_workers()
        )));
    }
    let bgn = nets.variant.bgn();
    let mut ha = actor.is_recurrent().then(|| tape.input(nets.actor_hidden.clone()));
    let mut hc = critic.is_recurrent().then(|| tape.input(nets.critic_hidden.clone()));
    let mut ro = Rollout {
        num_workers: n,
        length,
        actor_inputs: Vec::with_capacity(length),
        critic_inputs: Vec::with_capacity(length),
        actions: Vec::with_capacity(length),
        rewards: Vec::with_capacity(length),
        values: Vec::with_capacity(length),
        log_probs: Vec::with_capacity(length),
        entropies: Vec::with_capacity(length),
        ends: Vec::with_capacity(length),
        beliefs: bgn.then(Vec::new),
        actor_beliefs: bgn.then(Vec::new),
        critic_beliefs: bgn.then(Vec::new),
        bootstrap: Vec::new(),
        vars: SegmentVars::default(),
        initial_actor_hidden: nets.actor_hidden.clone(),
        initial_critic_hidden: nets.critic_hidden.clone(),
        actor_hidden: Array2::zeros((n, 0)),
        critic_hidden: Array2::zeros((n, 0)),
    };
    let mut episodes = Vec::new();
    for _ in 0..length {
        let ain = workers.encode(actor.source);
        let cin = workers.encode(critic.source);
        let a_out = net_step(tape, actor, &placed.actor, &ain, ha)?;
        let c_out = net_step(tape, critic, &placed.critic, &cin, hc)?;
        if bgn {
            let (ab, cb) = (a_out.belief.expect("bgn head"), c_out.belief.expect("bgn head"));
            ro.beliefs.as_mut().unwrap().push(workers.beliefs());
            ro.actor_beliefs.as_mut().unwrap().push(tape.value(ab).clone());
            ro.critic_beliefs.as_mut().unwrap().push(tape.value(cb).clone());
            ro.vars.actor_belief.push(ab);
            ro.vars.critic_belief.push(cb);
        }
        let policy = tape.value(a_out.head);
        let mut actions = Vec::with_capacity(n);
        let mut log_probs = Vec::with_capacity(n);
        let mut entropies = Vec::with_capacity(n);
        for row in policy.rows() {
            let p = row.to_vec();
            let a = sample_action(&p, rng);
            actions.push(a);
            log_probs.push(p[a].max(crate::tensor::LOG_FLOOR).ln());
            entropies.push(-p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>());
        }
        let values: Vec<f64> = tape.value(c_out.head).column(0).to_vec();

        let results = workers.step(&actions)?;
        let truncated: Vec<usize> = (0..n).filter(|&w| results[w].truncated).collect();
        let mut ends: Vec<StepEnd> = results
            .iter()
            .map(|r| if r.terminated { StepEnd::Terminated } else { StepEnd::Continue })
            .collect();
        if !truncated.is_empty() {
            let inputs: Vec<Encoded> = truncated.iter().map(|&w| workers.env(w).encode(critic.source)).collect();
            let h = c_out.hidden.map(|h| select_rows(tape.value(h), &truncated));
            let h = h.map(|h| tape.input(h));
            let out = net_step(tape, critic, &placed.critic, &inputs, h)?;
            let v = tape.value(out.head);
            for (k, &w) in truncated.iter().enumerate() {
                ends[w] = StepEnd::Truncated { value: v[[k, 0]] };
            }
        }
        episodes.extend(workers.finish(&results));
        let done: Vec<bool> = results.iter().map(|r| r.done()).collect();
        ha = a_out.hidden.map(|h| mask_done(tape, h, &done)).transpose()?;
        hc = c_out.hidden.map(|h| mask_done(tape, h, &done)).transpose()?;

        ro.actor_inputs.push(ain);
        ro.critic_inputs.push(cin);
        ro.actions.push(actions);
        ro.rewards.push(results.iter().map(|r| r.reward).collect());
        ro.values.push(values);
        ro.log_probs.push(log_probs);
        ro.entropies.push(entropies);
        ro.ends.push(ends);
        ro.vars.policy.push(a_out.head);
        ro.vars.value.push(c_out.head);
    }
    let cin = workers.encode(critic.source);
    let out = net_step(tape, critic, &placed.critic, &cin, hc)?;
    ro.bootstrap = tape.value(out.head).column(0).to_vec();
    if let Some(h) = ha {
        ro.actor_hidden = tape.value(h).clone();
    }
    if let Some(h) = hc {
        ro.critic_hidden = tape.value(h).clone();
    }
    Ok((ro, episodes))
}

/// Re-runs the recorded forward passes of `rollout` on a fresh tape, with
/// the same inputs and episode boundaries, and returns the new nodes.
///
/// Used to differentiate a fixed batch with respect to perturbed parameters.
pub fn replay_segment(tape: &mut Tape, nets: &AgentNets, placed: &PlacedAgent, rollout: &Rollout) -> Result<SegmentVars, TrainError> {
    let actor = nets.actor.as_ref().ok_or(AgentError::NoNetworks)?;
    let critic = nets.critic.as_ref().ok_or(AgentError::NoNetworks)?;
    let mut ha = actor.is_recurrent().then(|| tape.input(rollout.initial_actor_hidden.clone()));
    let mut hc = critic.is_recurrent().then(|| tape.input(rollout.initial_critic_hidden.clone()));
    let mut vars = SegmentVars::default();
    for t in 0..rollout.length {
        let a_out = net_step(tape, actor, &placed.actor, &rollout.actor_inputs[t], ha)?;
        let c_out = net_step(tape, critic, &placed.critic, &rollout.critic_inputs[t], hc)?;
        let done: Vec<bool> = rollout.ends[t].iter().map(|e| *e != StepEnd::Continue).collect();
        ha = a_out.hidden.map(|h| mask_done(tape, h, &done)).transpose()?;
        hc = c_out.hidden.map(|h| mask_done(tape, h, &done)).transpose()?;
        vars.policy.push(a_out.head);
        vars.value.push(c_out.head);
        vars.actor_belief.extend(a_out.belief);
        vars.critic_belief.extend(c_out.belief);
    }
    Ok(vars)
}

/// Uniform-random segment for the parameter-free agent.
pub fn collect_random<R: Rng + ?Sized>(
    workers: &mut Workers,
    num_actions: usize,
    length: usize,
    rng: &mut R,
) -> Result<Vec<EpisodeRecord>, TrainError> {
    let uniform = vec![1.0 / num_actions as f64; num_actions];
    let mut episodes = Vec::new();
    for _ in 0..length {
        let actions: Vec<usize> = (0..workers.len()).map(|_| sample_action(&uniform, rng)).collect();
        let (_, eps) = workers.advance(&actions)?;
        episodes.extend(eps);
    }
    Ok(episodes)
}
