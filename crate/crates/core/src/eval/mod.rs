//! Probes run on a frozen model: mode coverage, memory likelihood, prior
//! usage, key-space interpolation, nearest neighbors, and slot purity.
//! Results are written as JSONL, CSV, or PGM.

mod export;
mod interpolate;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use export::{
    read_metrics_jsonl, write_grid_csv, write_grid_pgm, write_metrics_csv, write_metrics_jsonl, FINGERPRINT_KEY,
};
pub use interpolate::{interpolate_keys, InterpolationGrid, ZPolicy};

use crate::error::{Error, Result};
use crate::linalg::{cosine, Matrix};
use crate::memory::{Label, MemoryState, Query};
use crate::nets::Mlp;

/// Slots whose prior mass falls below this are dropped from prior reports.
pub const PRIOR_REPORT_THRESHOLD: f64 = 4e-4;

/// One row of emitted training metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub d_loss: f64,
    pub g_loss: f64,
    pub info_term: f64,
    /// Absent when the discriminator has no memory.
    pub avg_biased_loglik: Option<f64>,
    /// Nats.
    pub prior_entropy: f64,
    /// Absent when the data has no known modes.
    pub mode_coverage: Option<f64>,
    pub real_slot_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Covered modes over total modes.
    pub coverage: f64,
    /// Fraction of samples whose nearest center is each mode.
    pub shares: Vec<f64>,
    pub covered: Vec<bool>,
}

/// Assigns every sample to its nearest center. A mode is covered when it
/// receives at least `min_share` of the samples and its members sit within
/// `threshold_sigmas * std` of the center on average.
pub fn mode_coverage(
    samples: &Matrix,
    centers: &[Vec<f64>],
    std: f64,
    threshold_sigmas: f64,
    min_share: f64,
) -> Result<CoverageReport> {
    if centers.is_empty() {
        return Err(Error::InvalidDimension("no mode centers".into()));
    }
    if let Some(c) = centers.iter().find(|c| c.len() != samples.cols()) {
        return Err(Error::DimensionMismatch {
            expected: samples.cols(),
            got: c.len(),
        });
    }
    let n_modes = centers.len();
    let mut counts = vec![0usize; n_modes];
    let mut dist_sum = vec![0.0; n_modes];
    for x in samples.iter_rows() {
        let (best, d) = centers
            .iter()
            .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        counts[best] += 1;
        dist_sum[best] += d;
    }
    let total = samples.rows();
    if total == 0 {
        return Ok(CoverageReport {
            coverage: 0.0,
            shares: vec![0.0; n_modes],
            covered: vec![false; n_modes],
        });
    }
    let shares: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let covered: Vec<bool> = (0..n_modes)
        .map(|k| counts[k] > 0 && shares[k] >= min_share && dist_sum[k] / counts[k] as f64 <= threshold_sigmas * std)
        .collect();
    let coverage = covered.iter().filter(|&&c| c).count() as f64 / n_modes as f64;
    Ok(CoverageReport {
        coverage,
        shares,
        covered,
    })
}

/// Queries `mu(x)` for every row, checked to be unit length.
pub fn queries(inference: &Mlp, x: &Matrix) -> Result<Vec<Query>> {
    inference
        .predict(x)?
        .iter_rows()
        .map(|r| Query::new(r.to_vec()))
        .collect()
}

/// Mean of the memory's real-slot log-likelihood over held-out reals.
pub fn avg_biased_loglik(memory: &MemoryState, inference: &Mlp, held_out: &Matrix) -> Result<f64> {
    if held_out.rows() == 0 {
        return Err(Error::InvalidDimension("empty held-out set".into()));
    }
    let qs = queries(inference, held_out)?;
    let mut total = 0.0;
    for q in &qs {
        total += memory.biased_loglik_real(q)?;
    }
    Ok(total / qs.len() as f64)
}

/// Shannon entropy of the slot prior, in nats.
pub fn prior_entropy(memory: &MemoryState) -> f64 {
    memory
        .slot_prior()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `(slot, prior)` for slots at or above [`PRIOR_REPORT_THRESHOLD`], by slot.
pub fn reported_prior(memory: &MemoryState) -> Vec<(usize, f64)> {
    memory
        .slot_prior()
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p >= PRIOR_REPORT_THRESHOLD)
        .collect()
}

/// Fraction of slots holding real samples.
pub fn real_slot_fraction(memory: &MemoryState) -> f64 {
    memory.values().iter().filter(|&&v| v == Label::Real).count() as f64 / memory.n_slots() as f64
}

/// Training rows ranked by cosine between their query and the query of
/// `generated`, best first, ties to the lower index.
pub fn nearest_training_neighbors(
    inference: &Mlp,
    generated: &[f64],
    training: &Matrix,
    top_n: usize,
) -> Result<Vec<(usize, f64)>> {
    if training.rows() == 0 {
        return Err(Error::InvalidDimension("empty training set".into()));
    }
    let probe = inference.predict(&Matrix::from_vec(1, generated.len(), generated.to_vec())?)?;
    let target = probe.row(0);
    let mut ranked: Vec<(usize, f64)> = inference
        .predict(training)?
        .iter_rows()
        .map(|q| cosine(q, target).clamp(-1.0, 1.0))
        .enumerate()
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    Ok(ranked)
}

/// Assigns each query to its most probable slot and returns
/// `sum over slots of the majority label count / total`.
pub fn cluster_purity(memory: &MemoryState, queries: &[Query], labels: &[usize]) -> Result<f64> {
    if queries.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: queries.len(),
            got: labels.len(),
        });
    }
    if queries.is_empty() {
        return Ok(1.0);
    }
    let mut tally: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (q, &label) in queries.iter().zip(labels) {
        let slot = memory.argmax_posterior(q)?;
        *tally.entry(slot).or_default().entry(label).or_default() += 1;
    }
    let majority: usize = tally.values().map(|t| t.values().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / queries.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::MemoryParams;
    use crate::nets::Activation;

    fn centers8() -> Vec<Vec<f64>> {
        (0..8)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 8.0;
                vec![2.0 * t.cos(), 2.0 * t.sin()]
            })
            .collect()
    }

    fn memory(keys: &[Vec<f64>], values: &[u8], hist: &[f64]) -> MemoryState {
        let n = keys.len();
        let params = MemoryParams { top_k: n, ..MemoryParams::default() };
        MemoryState::from_parts(
            Matrix::from_rows(keys).unwrap(),
            values.iter().map(|&b| Label::from_bit(b)).collect(),
            vec![0; n],
            hist.to_vec(),
            params,
        )
        .unwrap()
    }

    /// Linear 2 -> 2 then unit normalization.
    fn identity_query_net() -> Mlp {
        let mut net = Mlp::new(2, &[(2, Activation::L2Norm)], 0).unwrap();
        net.params_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        net
    }

    #[test]
    fn coverage_cases() {
        let c = centers8();
        let spread = Matrix::from_rows(&c.iter().cycle().take(80).cloned().collect::<Vec<_>>()).unwrap();
        assert_eq!(mode_coverage(&spread, &c, 0.05, 4.0, 0.02).unwrap().coverage, 1.0);
        let collapsed = Matrix::from_rows(&vec![c[3].clone(); 50]).unwrap();
        let r = mode_coverage(&collapsed, &c, 0.05, 4.0, 0.02).unwrap();
        assert_eq!(r.coverage, 1.0 / 8.0);
        assert_eq!(r.shares[3], 1.0);
        assert_eq!(mode_coverage(&Matrix::zeros(0, 2), &c, 0.05, 4.0, 0.02).unwrap().coverage, 0.0);
    }

    #[test]
    fn diffuse_members_are_not_covered() {
        let c = centers8();
        let far: Vec<Vec<f64>> = (0..40).map(|i| vec![2.0 + 0.5 * (i % 2) as f64, 0.0]).collect();
        let r = mode_coverage(&Matrix::from_rows(&far).unwrap(), &c, 0.05, 4.0, 0.02).unwrap();
        assert_eq!(r.coverage, 0.0);
        assert_eq!(r.shares[0], 1.0);
    }

    #[test]
    fn loglik_cases() {
        let net = identity_query_net();
        let held = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let one = memory(&[vec![1.0, 0.0]], &[1], &[1.0]);
        assert!((avg_biased_loglik(&one, &net, &held).unwrap() - 1.0).abs() < 1e-12);
        let orth = memory(&[vec![0.0, 1.0]], &[1], &[1.0]);
        assert!(avg_biased_loglik(&orth, &net, &held).unwrap().abs() < 1e-12);
        assert!(avg_biased_loglik(&one, &net, &Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn entropy_cases() {
        let params = MemoryParams::default();
        let uniform = MemoryState::new(4096, 2, params, 0).unwrap();
        assert!((prior_entropy(&uniform) - 4096f64.ln()).abs() < 1e-9);
        let e = vec![vec![0.0, 0.0]; 4];
        assert!(prior_entropy(&memory(&e, &[1, 0, 1, 0], &[1e6, 0.0, 0.0, 0.0])) < 1e-9);
        let two = prior_entropy(&memory(&e, &[1, 0, 1, 0], &[5.0, 5.0, 0.0, 0.0]));
        assert!((two - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn reported_prior_drops_tiny_slots() {
        let e = vec![vec![0.0, 0.0]; 3];
        let m = memory(&e, &[1, 0, 1], &[1.0, 1e-5, 2.0]);
        let slots: Vec<usize> = reported_prior(&m).into_iter().map(|(s, _)| s).collect();
        assert_eq!(slots, vec![0, 2]);
    }

    #[test]
    fn neighbor_cases() {
        let net = identity_query_net();
        let train = Matrix::from_rows(&[
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![2.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, -3.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ])
        .unwrap();
        let r = nearest_training_neighbors(&net, &[2.0, 0.0], &train, 7).unwrap();
        assert_eq!(r.len(), 7);
        assert_eq!(r[0], (2, 1.0));
        assert!(r.windows(2).all(|w| w[0].1 >= w[1].1));
        // Equal cosines keep index order.
        let r = nearest_training_neighbors(&net, &[1.0, 0.0], &train, 8).unwrap();
        assert_eq!((r[3].0, r[4].0), (0, 4));
        assert!(r[3].1.abs() < 1e-15 && r[4].1.abs() < 1e-15);
    }

    #[test]
    fn purity_cases() {
        let m = memory(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1, 1], &[1.0, 1.0]);
        let q = |v: [f64; 2]| Query::new(v.to_vec()).unwrap();
        let qs = vec![q([1.0, 0.0]), q([1.0, 0.0]), q([0.0, 1.0]), q([0.0, 1.0])];
        assert_eq!(cluster_purity(&m, &qs, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(cluster_purity(&m, &qs, &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(cluster_purity(&m, &qs[..1], &[3]).unwrap(), 1.0);
    }
}
