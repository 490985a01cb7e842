use super::{io_err, BenchError};
use crate::agent::{sample_action, AgentNets};
use crate::env::{Domain, DomainKind, Env};
use crate::tensor::LOG_FLOOR;
use crate::trainer::load_agent;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// `KL(p ‖ q)` in nats, with `q` floored like the training loss.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.max(LOG_FLOOR).ln()))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefFrame {
    pub episode: usize,
    pub t: usize,
    /// Exact belief on the display grid.
    pub truth: Vec<Vec<f64>>,
    /// Actor-head prediction on the display grid.
    pub predicted: Vec<Vec<f64>>,
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefComparison {
    pub domain: String,
    pub variant: String,
    pub grid: (usize, usize),
    pub seed: u64,
    pub episodes: usize,
    /// Mean of `kl` over every frame.
    pub mean_kl: f64,
    pub frames: Vec<BeliefFrame>,
}

fn grid_shape(domain: &Domain) -> (usize, usize) {
    match &domain.kind {
        DomainKind::Robot(r) => r.y_grid(),
        DomainKind::Tabular(m) => (1, m.num_states()),
    }
}

fn to_grid(v: &[f64], (rows, cols): (usize, usize)) -> Vec<Vec<f64>> {
    v.chunks(cols).take(rows).map(<[f64]>::to_vec).collect()
}

/// Rolls out the actor for `episodes` episodes, sampling actions, and
/// records the true and predicted belief at every decision step.
pub fn belief_comparison(
    nets: &mut AgentNets,
    domain: &Arc<Domain>,
    seed: u64,
    episodes: usize,
) -> Result<BeliefComparison, BenchError> {
    if !nets.variant.bgn() {
        return Err(BenchError::NotBgn(nets.variant.to_string()));
    }
    let (source, _) = nets.variant.inputs().expect("bgn variants have networks");
    let grid = grid_shape(domain);
    let mut env = Env::new(Arc::clone(domain), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut frames = Vec::new();
    for episode in 0..episodes {
        env.reset();
        nets.reset_hidden(0);
        for t in 0.. {
            let (policy, predicted) = nets
                .actor_forward(&env.encode(source), 0)
                .map_err(crate::trainer::TrainError::from)?;
            let predicted = predicted.expect("bgn actor has a belief head");
            let truth = env.belief().probs();
            frames.push(BeliefFrame {
                episode,
                t,
                kl: kl_divergence(truth, &predicted),
                truth: to_grid(truth, grid),
                predicted: to_grid(&predicted, grid),
            });
            let a = sample_action(&policy, &mut rng);
            let r = env.step(a).map_err(crate::trainer::TrainError::from)?;
            if r.done() {
                break;
            }
        }
    }
    let mean_kl = frames.iter().map(|f| f.kl).sum::<f64>() / frames.len() as f64;
    Ok(BeliefComparison {
        domain: domain.name.clone(),
        variant: nets.variant.to_string(),
        grid,
        seed,
        episodes,
        mean_kl,
        frames,
    })
}

/// Loads a BGN checkpoint, runs [`belief_comparison`] and writes the result
/// as JSON to `out`.
pub fn export_belief_comparison(checkpoint: &Path, seed: u64, episodes: usize, out: &Path) -> Result<BeliefComparison, BenchError> {
    let (mut nets, domain, _) = load_agent(checkpoint, 1)?;
    let cmp = belief_comparison(&mut nets, &domain, seed, episodes)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let text = serde_json::to_string(&cmp).expect("comparison serializes");
    std::fs::write(out, text).map_err(io_err(out))?;
    Ok(cmp)
}
