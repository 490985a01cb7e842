use super::Matrix;
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// `rows × fan_in` matrix uniform in `±1/√fan_in`.
pub fn init_uniform_fan_in<R: Rng + ?Sized>(rows: usize, fan_in: usize, rng: &mut R) -> Matrix {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array2::from_shape_simple_fn((rows, fan_in), || dist.sample(rng))
}

/// Embedding table with standard-normal entries.
pub fn init_embedding<R: Rng + ?Sized>(rows: usize, dim: usize, rng: &mut R) -> Matrix {
    Array2::from_shape_simple_fn((rows, dim), || StandardNormal.sample(rng))
}
