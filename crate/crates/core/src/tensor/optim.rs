use super::{Gradients, Matrix, ParamSet};
use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

/// Clips gradients to a joint L2 norm of `max_norm` and returns the norm
/// measured before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Defaults are learning rate 7e-4, decay 0.99 and denominator constant 0.95.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            learning_rate: 7e-4,
            decay: 0.99,
            epsilon: 0.95,
        }
    }
}

/// RMSProp with squared-gradient accumulators.
///
/// `acc ← ρ acc + (1 − ρ) g²`, `θ ← θ − lr g / (√acc + ε)`. Parameters
/// without a gradient are treated as having a zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    accumulators: Vec<Matrix>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig, params: &ParamSet) -> Self {
        RmsProp {
            config,
            accumulators: params.ids().map(|id| Array2::zeros(params.get(id).dim())).collect(),
        }
    }

    pub fn accumulators(&self) -> &[Matrix] {
        &self.accumulators
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) {
        let RmsPropConfig {
            learning_rate: lr,
            decay: rho,
            epsilon: eps,
        } = self.config;
        for (id, g) in grads.iter() {
            let acc = &mut self.accumulators[id.index()];
            match g {
                Some(g) => {
                    let theta = params.get_mut(id);
                    Zip::from(theta).and(&mut *acc).and(g).for_each(|t, a, &g| {
                        *a = rho * *a + (1.0 - rho) * g * g;
                        *t -= lr * g / (a.sqrt() + eps);
                    });
                }
                None => acc.mapv_inplace(|a| rho * a),
            }
        }
    }
}
