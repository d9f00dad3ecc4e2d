//! Per-replication train/test splits from a keyed ChaCha stream.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one replication. The stream number is the replication
/// index, so each split depends only on `(seed, replication)`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// `round(fraction * n)` with ties to even.
pub fn train_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round_ties_even() as usize
}

/// Sorted training rows of size `n_train` drawn uniformly without replacement.
pub fn train_rows(n: usize, n_train: usize, seed: u64, replication: u64) -> Vec<usize> {
    let mut rng = replication_rng(seed, replication);
    let mut rows = index::sample(&mut rng, n, n_train).into_vec();
    rows.sort_unstable();
    rows
}

/// Complement of sorted `train` in `0..n`.
pub fn test_rows(n: usize, train: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - train.len());
    let mut t = train.iter().peekable();
    for i in 0..n {
        if t.peek() == Some(&&i) {
            t.next();
        } else {
            out.push(i);
        }
    }
    out
}
