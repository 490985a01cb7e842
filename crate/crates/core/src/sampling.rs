use rand::Rng;

/// Draws an index with probability proportional to `weights`.
///
/// Uses a single uniform draw and a cumulative scan, so a fixed rng state
/// always yields the same index. Falls back to the last positive entry when
/// rounding leaves the draw past the accumulated mass.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Like [`sample_index`] for sparse `(index, weight)` lists.
pub fn sample_sparse<R: Rng + ?Sized>(entries: &[(usize, f64)], rng: &mut R) -> usize {
    let total: f64 = entries.iter().map(|e| e.1).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = entries.first().map(|e| e.0).unwrap_or(0);
    for &(i, w) in entries {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_hot_is_always_chosen() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_index(&[0.0, 0.0, 1.0, 0.0], &mut rng), 2);
            assert_eq!(sample_sparse(&[(7, 0.0), (9, 1.0)], &mut rng), 9);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let w = [0.1, 0.2, 0.3, 0.4];
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<usize> = (0..50).map(|_| sample_index(&w, &mut a)).collect();
        let ys: Vec<usize> = (0..50).map(|_| sample_index(&w, &mut b)).collect();
        assert_eq!(xs, ys);
    }
}
