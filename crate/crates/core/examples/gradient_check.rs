//! Compares tape gradients of a two-step GRU with central differences.
//!
//! `cargo run --example gradient_check`

use bgn::tensor::gradcheck::check_gradients;
use bgn::tensor::{GruVars, ParamSet, Tape};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rand = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
    let (input, hidden, batch) = (3, 4, 2);
    let mut params = ParamSet::new();
    let w = params.add("gru/w", rand(3 * hidden, input));
    let u = params.add("gru/u", rand(3 * hidden, hidden));
    let b = params.add("gru/b", rand(1, 3 * hidden));
    let b_hn = params.add("gru/b_hn", rand(1, hidden));
    let head = params.add("head/w", rand(2, hidden));
    let xs = [rand(batch, input), rand(batch, input)];
    let target = Array2::from_shape_vec((batch, 2), vec![0.3, 0.7, 1.0, 0.0])?;

    let report = check_gradients(&params, 1e-5, |t: &mut Tape| {
        let g = GruVars {
            input: t.param(w),
            recurrent: t.param(u),
            input_bias: t.param(b),
            hidden_bias: t.param(b_hn),
        };
        let mut h = t.input(Array2::zeros((batch, hidden)));
        for x in &xs {
            let x = t.input(x.clone());
            h = t.gru_step(x, h, &g)?;
        }
        let hw = t.param(head);
        let logits = t.matmul_t(h, hw)?;
        let p = t.softmax(logits);
        let ce = t.cross_entropy(target.clone(), p)?;
        Ok(t.mean(ce))
    })?;
    println!(
        "{} entries checked, max relative error {:.2e} (at {}), max absolute error on tiny entries {:.2e}",
        report.entries_checked,
        report.max_relative_error,
        report.worst_param.as_deref().unwrap_or("-"),
        report.max_small_abs_error
    );
    Ok(())
}
