use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `n` points around `n_modes` centers evenly spaced on a circle of `radius`,
/// each with isotropic Gaussian noise of standard deviation `std`. Mode `k`
/// sits at angle `2 pi k / n_modes`.
pub fn gaussian_ring(n_modes: usize, radius: f64, std: f64, n: usize, seed: u64) -> Result<Dataset> {
    if n_modes == 0 {
        return Err(Error::InvalidDimension("ring needs at least one mode".into()));
    }
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::InvalidParams {
            name: "std",
            reason: format!("{std} is not a valid standard deviation"),
        });
    }
    let noise = Normal::new(0.0, std).expect("finite non-negative std");
    let centers: Vec<Vec<f64>> = (0..n_modes)
        .map(|k| {
            let angle = TAU * k as f64 / n_modes as f64;
            vec![radius * angle.cos(), radius * angle.sin()]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Matrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = rng.random_range(0..n_modes);
        let row = samples.row_mut(i);
        row[0] = centers[k][0] + noise.sample(&mut rng);
        row[1] = centers[k][1] + noise.sample(&mut rng);
        labels.push(k);
    }
    Dataset::new(samples, Some(labels), Some(centers))
}
