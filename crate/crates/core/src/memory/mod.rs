//! Discriminative memory: a von Mises-Fisher mixture over memory slots.
//!
//! Each slot `i` holds a unit-norm mean direction `K_i`, a binary value
//! `v_i` (real or fake), an age `a_i` used for least-recently-used
//! allocation, and an effective count `h_i`. The slot prior is the
//! smoothed, normalized histogram and the likelihood of a unit query `q`
//! under slot `i` is proportional to `exp(kappa * K_i . q)`; the vMF
//! normalizer is constant across slots and never computed.
//!
//! Slot indices are zero-based throughout.

mod snapshot;
mod update;

pub use update::WriteOutcome;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, norm, Matrix};

/// Tolerance for the unit-norm invariant on queries and keys.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Initial per-slot histogram mass.
pub const INITIAL_HISTOGRAM: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Fake,
    Real,
}

impl Label {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Label::Fake
        } else {
            Label::Real
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Fake => 0,
            Label::Real => 1,
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        f64::from(self.bit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    /// vMF concentration.
    pub kappa: f64,
    /// Smoothing added to every histogram entry in the prior.
    pub beta: f64,
    /// Discriminative probabilities are clipped to `[epsilon, 1 - epsilon]`.
    pub epsilon: f64,
    /// Decay applied to the histogram of selected slots before an EM write.
    pub alpha: f64,
    pub top_k: usize,
    pub em_iters: usize,
}

impl Default for MemoryParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            beta: 1e-8,
            epsilon: 1e-3,
            alpha: 0.5,
            top_k: 128,
            em_iters: 3,
        }
    }
}

impl MemoryParams {
    pub fn validate(&self, n_slots: usize) -> Result<()> {
        fn bad(name: &'static str, reason: String) -> Result<()> {
            Err(Error::InvalidParams { name, reason })
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("kappa", format!("{} must be positive", self.kappa));
        }
        if !(self.beta > 0.0) {
            return bad("beta", format!("{} must be positive", self.beta));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad("epsilon", format!("{} must lie in (0, 0.5)", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", format!("{} must lie in (0, 1]", self.alpha));
        }
        if self.top_k == 0 || self.top_k > n_slots {
            return bad(
                "top_k",
                format!("{} must lie in [1, {n_slots}]", self.top_k),
            );
        }
        if self.em_iters == 0 {
            return bad("em_iters", "must be at least 1".into());
        }
        Ok(())
    }
}

/// A unit-norm query direction `q = mu(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query(Vec<f64>);

impl Query {
    /// Wraps a vector that is already unit norm.
    pub fn new(direction: Vec<f64>) -> Result<Self> {
        let n = norm(&direction);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidDimension(format!(
                "query norm {n} is not 1"
            )));
        }
        Ok(Self(direction))
    }

    /// Rescales `direction` to unit norm. Fails on the zero vector.
    pub fn normalized(mut direction: Vec<f64>) -> Result<Self> {
        let n = norm(&direction);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidDimension("cannot normalize a zero query".into()));
        }
        direction.iter_mut().for_each(|x| *x /= n);
        Ok(Self(direction))
    }

    pub fn direction(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Top-k slots ordered by decreasing joint score.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSelection {
    pub indices: Vec<usize>,
    /// Unnormalized joint scores `exp(kappa K_i . q) (h_i + beta)`.
    pub scores: Vec<f64>,
    /// Posterior weights renormalized over the selection.
    pub weights: Vec<f64>,
}

impl SlotSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn from_log_scores(mut ranked: Vec<(usize, f64)>) -> Self {
        ranked.sort_by(rank_order);
        let logs: Vec<f64> = ranked.iter().map(|&(_, s)| s).collect();
        let lse = log_sum_exp(&logs);
        Self {
            indices: ranked.iter().map(|&(i, _)| i).collect(),
            scores: logs.iter().map(|s| s.exp()).collect(),
            weights: logs.iter().map(|s| (s - lse).exp()).collect(),
        }
    }
}

/// Descending score, ties to the lower index.
fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` best entries under [`rank_order`], unsorted.
fn partial_top_k(mut ranked: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, rank_order);
        ranked.truncate(k);
    }
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryState {
    pub(crate) keys: Matrix,
    pub(crate) values: Vec<Label>,
    pub(crate) ages: Vec<u64>,
    pub(crate) histogram: Vec<f64>,
    pub(crate) params: MemoryParams,
}

impl MemoryState {
    /// Zero keys and ages, histogram `1e-5`, values independent fair coin flips.
    pub fn new(n_slots: usize, key_dim: usize, params: MemoryParams, seed: u64) -> Result<Self> {
        if n_slots == 0 || key_dim == 0 {
            return Err(Error::InvalidDimension(format!(
                "memory needs n_slots >= 1 and key_dim >= 1, got {n_slots}x{key_dim}"
            )));
        }
        params.validate(n_slots)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n_slots)
            .map(|_| if rng.random_bool(0.5) { Label::Real } else { Label::Fake })
            .collect();
        Ok(Self {
            keys: Matrix::zeros(n_slots, key_dim),
            values,
            ages: vec![0; n_slots],
            histogram: vec![INITIAL_HISTOGRAM; n_slots],
            params,
        })
    }

    /// Assembles a state from raw parts, checking every invariant.
    pub fn from_parts(
        keys: Matrix,
        values: Vec<Label>,
        ages: Vec<u64>,
        histogram: Vec<f64>,
        params: MemoryParams,
    ) -> Result<Self> {
        let n = keys.rows();
        if n == 0 || keys.cols() == 0 {
            return Err(Error::InvalidDimension("empty key matrix".into()));
        }
        for len in [values.len(), ages.len(), histogram.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        params.validate(n)?;
        let state = Self {
            keys,
            values,
            ages,
            histogram,
            params,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn check_invariants(&self) -> Result<()> {
        for (i, row) in self.keys.iter_rows().enumerate() {
            let n = norm(row);
            if n != 0.0 && (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidDimension(format!(
                    "key {i} has norm {n}"
                )));
            }
        }
        if let Some((slot, &value)) = self
            .histogram
            .iter()
            .enumerate()
            .find(|(_, h)| !(**h >= 0.0 && h.is_finite()))
        {
            return Err(Error::DegenerateHistogram { slot, value });
        }
        Ok(())
    }

    pub fn n_slots(&self) -> usize {
        self.keys.rows()
    }

    pub fn key_dim(&self) -> usize {
        self.keys.cols()
    }

    pub fn params(&self) -> &MemoryParams {
        &self.params
    }

    /// Replaces the hyperparameters, e.g. to evaluate with a different `top_k`.
    pub fn set_params(&mut self, params: MemoryParams) -> Result<()> {
        params.validate(self.n_slots())?;
        self.params = params;
        Ok(())
    }

    pub fn keys(&self) -> &Matrix {
        &self.keys
    }

    pub fn key(&self, slot: usize) -> &[f64] {
        self.keys.row(slot)
    }

    pub fn values(&self) -> &[Label] {
        &self.values
    }

    pub fn ages(&self) -> &[u64] {
        &self.ages
    }

    pub fn histogram(&self) -> &[f64] {
        &self.histogram
    }

    /// Whether the slot has ever received a key (allocation or EM).
    pub fn is_written(&self, slot: usize) -> bool {
        self.keys.row(slot).iter().any(|&x| x != 0.0)
    }

    pub fn real_slot_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == Label::Real).count()
    }

    fn check_query(&self, q: &Query) -> Result<()> {
        if q.dim() != self.key_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.key_dim(),
                got: q.dim(),
            });
        }
        Ok(())
    }

    #[inline]
    fn log_score(&self, slot: usize, q: &[f64]) -> f64 {
        self.params.kappa * dot(self.keys.row(slot), q)
            + (self.histogram[slot] + self.params.beta).ln()
    }

    /// `p(c = i) = (h_i + beta) / sum_j (h_j + beta)`.
    pub fn slot_prior(&self) -> Vec<f64> {
        let beta = self.params.beta;
        let total: f64 = self.histogram.iter().map(|h| h + beta).sum();
        self.histogram.iter().map(|h| (h + beta) / total).collect()
    }

    /// Exact posterior `p(c = i | x)` over every slot.
    pub fn posterior_exact(&self, q: &Query) -> Result<Vec<f64>> {
        self.check_query(q)?;
        let logs: Vec<f64> = (0..self.n_slots())
            .map(|i| self.log_score(i, q.direction()))
            .collect();
        let lse = log_sum_exp(&logs);
        Ok(logs.iter().map(|s| (s - lse).exp()).collect())
    }

    /// The `top_k` slots with the largest joint score. With a label, only
    /// slots carrying that value compete.
    pub fn top_k_slots(&self, q: &Query, conditional_label: Option<Label>) -> Result<SlotSelection> {
        self.check_query(q)?;
        let ranked: Vec<(usize, f64)> = (0..self.n_slots())
            .filter(|&i| conditional_label.is_none_or(|y| self.values[i] == y))
            .map(|i| (i, self.log_score(i, q.direction())))
            .collect();
        if ranked.is_empty() {
            // Only reachable with a label: the unconditioned candidate set is never empty.
            return Err(Error::EmptyCandidateSet(conditional_label.map_or(0, Label::bit)));
        }
        Ok(SlotSelection::from_log_scores(partial_top_k(
            ranked,
            self.params.top_k,
        )))
    }

    /// `sum_{i in S} v_i w_i` over the unconditioned top-k selection, before clipping.
    pub fn discriminative_prob_unclipped(&self, q: &Query) -> Result<f64> {
        let sel = self.top_k_slots(q, None)?;
        Ok(sel
            .indices
            .iter()
            .zip(&sel.weights)
            .map(|(&i, w)| self.values[i].value() * w)
            .sum())
    }

    /// `p(y = 1 | x)` from the top-k approximation, clipped to `[eps, 1 - eps]`.
    pub fn discriminative_prob(&self, q: &Query) -> Result<f64> {
        let eps = self.params.epsilon;
        Ok(self.discriminative_prob_unclipped(q)?.clamp(eps, 1.0 - eps))
    }

    /// Clipped probability together with its gradient with respect to the
    /// query direction. The selected set is held fixed (the map is piecewise
    /// smooth) and the gradient vanishes wherever the clip is active.
    pub fn discriminative_prob_grad(&self, q: &Query) -> Result<(f64, Vec<f64>)> {
        let sel = self.top_k_slots(q, None)?;
        let p: f64 = sel
            .indices
            .iter()
            .zip(&sel.weights)
            .map(|(&i, w)| self.values[i].value() * w)
            .sum();
        let eps = self.params.epsilon;
        let mut grad = vec![0.0; self.key_dim()];
        if p < eps || p > 1.0 - eps {
            return Ok((p.clamp(eps, 1.0 - eps), grad));
        }
        // dp/dq = kappa * sum_i w_i (v_i - p) K_i
        for (&i, &w) in sel.indices.iter().zip(&sel.weights) {
            let coef = self.params.kappa * w * (self.values[i].value() - p);
            for (g, k) in grad.iter_mut().zip(self.keys.row(i)) {
                *g += coef * k;
            }
        }
        Ok((p, grad))
    }

    /// Sampling distribution over real slots, `P(c = i | v_c = 1) ∝ h_i v_i`.
    pub fn real_slot_sampler(&self) -> Result<WeightedIndex<f64>> {
        let weights: Vec<f64> = self
            .histogram
            .iter()
            .zip(&self.values)
            .map(|(h, v)| h * v.value())
            .collect();
        WeightedIndex::new(weights).map_err(|_| Error::NoRealSlots)
    }

    pub fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        Ok(self.real_slot_sampler()?.sample(rng))
    }

    /// Log of the real-slot likelihood with the vMF normalizer dropped:
    /// `ln sum_{i in S_1} exp(kappa K_i . q) p(c=i) / sum_{v_j = 1} p(c=j)`,
    /// where `S_1` is the top-k selection among real slots.
    pub fn biased_loglik_real(&self, q: &Query) -> Result<f64> {
        self.check_query(q)?;
        let beta = self.params.beta;
        let real_mass: f64 = self
            .histogram
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v == Label::Real)
            .map(|(h, _)| h + beta)
            .sum();
        if real_mass == 0.0 {
            return Err(Error::NoRealSlots);
        }
        let sel = match self.top_k_slots(q, Some(Label::Real)) {
            Ok(sel) => sel,
            Err(Error::EmptyCandidateSet(_)) => return Err(Error::NoRealSlots),
            Err(e) => return Err(e),
        };
        let logs: Vec<f64> = sel
            .indices
            .iter()
            .map(|&i| self.log_score(i, q.direction()))
            .collect();
        Ok(log_sum_exp(&logs) - real_mass.ln())
    }

    /// Index of the slot with the highest posterior for `q`, ties to the lower index.
    pub fn argmax_posterior(&self, q: &Query) -> Result<usize> {
        self.check_query(q)?;
        let mut best = (0, f64::NEG_INFINITY);
        for i in 0..self.n_slots() {
            let s = self.log_score(i, q.direction());
            if s > best.1 {
                best = (i, s);
            }
        }
        Ok(best.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    pub(crate) fn state_with(keys: &[Vec<f64>], hist: &[f64], values: &[u8], params: MemoryParams) -> MemoryState {
        MemoryState::from_parts(
            Matrix::from_rows(keys).unwrap(),
            values.iter().map(|&b| Label::from_bit(b)).collect(),
            vec![0; keys.len()],
            hist.to_vec(),
            params,
        )
        .unwrap()
    }

    fn params(k: usize) -> MemoryParams {
        MemoryParams {
            top_k: k,
            ..MemoryParams::default()
        }
    }

    fn q(v: &[f64]) -> Query {
        Query::new(v.to_vec()).unwrap()
    }

    fn e3() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
    }

    #[test]
    fn init_matches_stated_values() {
        let s = MemoryState::new(4096, 256, MemoryParams::default(), 7).unwrap();
        assert!(s.histogram().iter().all(|&h| h == 1e-5));
        let s = MemoryState::new(2, 3, params(2), 7).unwrap();
        assert!(s.keys().as_slice().iter().all(|&k| k == 0.0));
        assert_eq!(s.ages(), &[0, 0]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = MemoryState::new(8, 4, params(4), 11).unwrap();
        let b = MemoryState::new(8, 4, params(4), 11).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(matches!(
            MemoryState::new(0, 3, params(1), 0),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            MemoryState::new(3, 0, params(1), 0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn params_validation() {
        let bad = MemoryParams { epsilon: 0.5, ..params(1) };
        assert!(bad.validate(4).is_err());
        let bad = MemoryParams { alpha: 0.0, ..params(1) };
        assert!(bad.validate(4).is_err());
        assert!(params(5).validate(4).is_err());
        assert!(params(4).validate(4).is_ok());
    }

    #[test]
    fn prior_examples() {
        let s = MemoryState::new(4, 2, params(4), 0).unwrap();
        for p in s.slot_prior() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let tiny = MemoryParams { beta: 1e-300, ..params(2) };
        let s = state_with(&[vec![1.0], vec![1.0]], &[1.0, 3.0], &[1, 1], tiny);
        let p = s.slot_prior();
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
        let s = state_with(&[vec![1.0], vec![1.0]], &[0.0, 0.0], &[1, 1], params(2));
        assert_eq!(s.slot_prior(), vec![0.5, 0.5]);
    }

    #[test]
    fn posterior_examples() {
        let s = state_with(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], &[1, 0], params(2));
        let p = s.posterior_exact(&q(&[1.0, 0.0])).unwrap();
        assert!((p[0] - E / (E + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (E + 1.0)).abs() < 1e-12);

        let h = 0.5f64.sqrt();
        let p = s.posterior_exact(&q(&[h, h])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);

        let tiny = MemoryParams { beta: 1e-300, ..params(3) };
        let s = state_with(&e3(), &[1.0, 1.0, 8.0], &[1, 0, 0], tiny);
        let p = s.posterior_exact(&q(&[1.0, 0.0, 0.0])).unwrap();
        let z = E + 1.0 + 8.0;
        for (got, want) in p.iter().zip([E / z, 1.0 / z, 8.0 / z]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((p[0] - 0.2320).abs() < 1e-4 && (p[2] - 0.6826).abs() < 1e-4);
    }

    #[test]
    fn posterior_rejects_wrong_dim() {
        let s = MemoryState::new(2, 3, params(2), 0).unwrap();
        assert!(matches!(
            s.posterior_exact(&q(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn top_k_examples() {
        let tiny = MemoryParams { beta: 1e-300, ..params(2) };
        let s = state_with(&e3(), &[1.0, 1.0, 8.0], &[1, 0, 0], tiny);
        let sel = s.top_k_slots(&q(&[1.0, 0.0, 0.0]), None).unwrap();
        assert_eq!(sel.indices, vec![2, 0]);
        assert!((sel.scores[0] - 8.0).abs() < 1e-12 && (sel.scores[1] - E).abs() < 1e-12);

        let sel = s.top_k_slots(&q(&[1.0, 0.0, 0.0]), Some(Label::Real)).unwrap();
        assert_eq!(sel.indices, vec![0]);
        assert_eq!(sel.weights, vec![1.0]);
    }

    #[test]
    fn top_k_exhaustive_matches_posterior() {
        let s = state_with(&e3(), &[1.0, 2.0, 8.0], &[1, 0, 0], params(3));
        let query = q(&[0.6, 0.8, 0.0]);
        let sel = s.top_k_slots(&query, None).unwrap();
        let post = s.posterior_exact(&query).unwrap();
        let mut sorted = sel.indices.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        for (i, w) in sel.indices.iter().zip(&sel.weights) {
            assert!((post[*i] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_conditional_without_candidates() {
        let s = state_with(&e3(), &[1.0, 1.0, 1.0], &[0, 0, 0], params(2));
        assert!(matches!(
            s.top_k_slots(&q(&[1.0, 0.0, 0.0]), Some(Label::Real)),
            Err(Error::EmptyCandidateSet(1))
        ));
    }

    #[test]
    fn discriminative_examples() {
        let s = state_with(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], &[1, 0], params(2));
        let p = s.discriminative_prob(&q(&[1.0, 0.0])).unwrap();
        assert!((p - E / (E + 1.0)).abs() < 1e-12);

        let s = state_with(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], &[1, 1], params(2));
        assert_eq!(s.discriminative_prob(&q(&[1.0, 0.0])).unwrap(), 0.999);

        let tiny = MemoryParams { beta: 1e-300, ..params(2) };
        let s = state_with(&e3(), &[1.0, 1.0, 8.0], &[1, 0, 0], tiny);
        let p = s.discriminative_prob(&q(&[1.0, 0.0, 0.0])).unwrap();
        assert!((p - E / (8.0 + E)).abs() < 1e-12);
        assert!((p - 0.2536).abs() < 1e-4);
    }

    #[test]
    fn discriminative_gradient_matches_finite_differences() {
        let keys = vec![
            vec![0.6, 0.8, 0.0],
            vec![0.0, 0.6, 0.8],
            vec![0.8, 0.0, 0.6],
            vec![0.0, 0.0, 1.0],
        ];
        let s = state_with(&keys, &[1.0, 0.5, 2.0, 0.7], &[1, 0, 1, 0], params(4));
        let dir = [0.3, -0.2, 0.9];
        let (_, grad) = s.discriminative_prob_grad(&Query::normalized(dir.to_vec()).unwrap()).unwrap();
        // The gradient is with respect to the raw (unit) direction, so perturb without renormalizing.
        let base = Query::normalized(dir.to_vec()).unwrap().into_inner();
        let h = 1e-6;
        for j in 0..3 {
            let mut plus = base.clone();
            plus[j] += h;
            let mut minus = base.clone();
            minus[j] -= h;
            let f = |v: Vec<f64>| {
                let sel_q = Query(v);
                s.discriminative_prob_unclipped(&sel_q).unwrap()
            };
            let fd = (f(plus) - f(minus)) / (2.0 * h);
            assert!((fd - grad[j]).abs() < 1e-8, "coord {j}: {fd} vs {}", grad[j]);
        }
    }

    #[test]
    fn sampling_support() {
        let s = state_with(&e3(), &[5.0, 1.0, 3.0], &[0, 1, 0], params(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert_eq!(s.sample_slot(&mut rng).unwrap(), 1);
        }
        let s = state_with(&[vec![1.0], vec![1.0]], &[1.0, 1.0], &[0, 0], params(1));
        assert!(matches!(s.sample_slot(&mut rng), Err(Error::NoRealSlots)));
    }

    #[test]
    fn biased_loglik_examples() {
        let s = state_with(&[vec![1.0, 0.0]], &[1.0], &[1], params(1));
        let ll = s.biased_loglik_real(&q(&[1.0, 0.0])).unwrap();
        assert!((ll - 1.0).abs() < 1e-12);
        let ll = s.biased_loglik_real(&q(&[0.0, 1.0])).unwrap();
        assert!(ll.abs() < 1e-12);

        let with_fakes = state_with(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            &[1.0, 4.0, 2.0],
            &[1, 0, 0],
            params(3),
        );
        let ll = with_fakes.biased_loglik_real(&q(&[1.0, 0.0])).unwrap();
        assert!((ll - 1.0).abs() < 1e-9);

        let no_real = state_with(&[vec![1.0, 0.0]], &[1.0], &[0], params(1));
        assert!(matches!(
            no_real.biased_loglik_real(&q(&[1.0, 0.0])),
            Err(Error::NoRealSlots)
        ));
    }

    #[test]
    fn argmax_ties_to_lower_index() {
        let s = state_with(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], &[1, 1], params(2));
        let h = 0.5f64.sqrt();
        assert_eq!(s.argmax_posterior(&q(&[h, h])).unwrap(), 0);
    }
}
