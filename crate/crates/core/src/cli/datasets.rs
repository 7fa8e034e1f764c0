//! Synthetic inputs.

use crate::{Error, PointSet, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const GAUSSIAN_BLOBS: usize = 5;

/// `n` points drawn uniformly from the cube `[0, √n]^d`.
pub fn gen_uniform(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("need at least one point and one dimension"));
    }
    let side = (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random_range(0.0..=side)).collect();
    PointSet::new(d, coords)
}

/// Five Gaussian blobs holding 90% of the points plus uniform background.
///
/// Blob means are uniform in `[0, 5√n]^d`. Each blob has standard deviation
/// `√n / 6` per coordinate, so about 99.7% of a blob lies within a diameter
/// of `√n` per axis. The remaining 10% are uniform in the same cube. Blob
/// points come first, in blob order, followed by the background.
pub fn gen_gaussian_disc(n: usize, d: usize, seed: u64) -> Result<PointSet> {
    if n < 10 {
        return Err(Error::invalid("the gaussian generator needs n >= 10"));
    }
    if d == 0 {
        return Err(Error::invalid("need at least one dimension"));
    }
    let root = (n as f64).sqrt();
    let side = 5.0 * root;
    let clustered = n * 9 / 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, root / 6.0).map_err(|e| Error::Internal(e.to_string()))?;
    let means: Vec<Vec<f64>> = (0..GAUSSIAN_BLOBS)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..=side)).collect())
        .collect();
    let mut coords = Vec::with_capacity(n * d);
    for (b, mean) in means.iter().enumerate() {
        let count = clustered / GAUSSIAN_BLOBS + usize::from(b < clustered % GAUSSIAN_BLOBS);
        for _ in 0..count {
            coords.extend(mean.iter().map(|m| m + normal.sample(&mut rng)));
        }
    }
    for _ in clustered..n {
        coords.extend((0..d).map(|_| rng.random_range(0.0..=side)));
    }
    PointSet::new(d, coords)
}

/// Blob means of [`gen_gaussian_disc`] for the same arguments.
pub fn gaussian_disc_means(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let side = 5.0 * (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..GAUSSIAN_BLOBS)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..=side)).collect())
        .collect()
}
