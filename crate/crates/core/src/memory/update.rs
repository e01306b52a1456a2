//! Memory writes: incremental EM on the label-conditional neighborhood of a
//! query, or least-recently-used allocation when the query lands on a slot of
//! the other label.

use super::{Label, MemoryState, Query, SlotSelection};
use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, normalize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WriteOutcome {
    /// The query was copied onto this (previously oldest) slot.
    Allocated(usize),
    /// These slots absorbed the query through an EM or running-average update.
    Updated(Vec<usize>),
}

impl WriteOutcome {
    pub fn touched(&self) -> &[usize] {
        match self {
            WriteOutcome::Allocated(slot) => std::slice::from_ref(slot),
            WriteOutcome::Updated(slots) => slots,
        }
    }
}

impl MemoryState {
    /// The conditional top-k of label `y`, or `None` when the query's most
    /// probable slot overall is unwritten or carries the other label.
    fn update_candidates(&self, q: &Query, y: Label) -> Result<Option<SlotSelection>> {
        let nearest = self.top_k_slots(q, None)?.indices[0];
        if !self.is_written(nearest) || self.values[nearest] != y {
            return Ok(None);
        }
        self.top_k_slots(q, Some(y)).map(Some)
    }

    /// Stores a labeled query: EM over its label's conditional top-k when its
    /// most probable slot is a written slot of the same label,
    /// allocation of the oldest slot otherwise. Ages advance once per call.
    pub fn write(&mut self, q: &Query, y: Label) -> Result<WriteOutcome> {
        let outcome = match self.update_candidates(q, y)? {
            Some(sel) => {
                self.em_update(&sel, q)?;
                WriteOutcome::Updated(sel.indices)
            }
            None => WriteOutcome::Allocated(self.allocate_oldest(q, y)?),
        };
        self.tick_ages(outcome.touched());
        Ok(outcome)
    }

    /// The running-average rule `K <- (K + q) / |K + q|` applied to the best
    /// matching slot of the correct label; histogram untouched. Allocation is
    /// shared with [`MemoryState::write`].
    pub fn write_running_average(&mut self, q: &Query, y: Label) -> Result<WriteOutcome> {
        let outcome = match self.update_candidates(q, y)? {
            Some(sel) => {
                let slot = sel.indices[0];
                let row = self.keys.row_mut(slot);
                for (k, x) in row.iter_mut().zip(q.direction()) {
                    *k += x;
                }
                if normalize(row) == 0.0 {
                    row.copy_from_slice(q.direction());
                }
                WriteOutcome::Updated(vec![slot])
            }
            None => WriteOutcome::Allocated(self.allocate_oldest(q, y)?),
        };
        self.tick_ages(outcome.touched());
        Ok(outcome)
    }

    /// Runs `em_iters` incremental EM steps on the selected slots and commits
    /// the resulting keys and histogram entries.
    ///
    /// Starting from `h^0 = alpha h`, `K^0 = K`, `gamma^0 = 0`, each step
    /// recomputes responsibilities over the selection and applies
    /// `h^t = h^{t-1} + dgamma`, `K^t = K^{t-1} + (dgamma / h^t)(q - K^{t-1})`,
    /// followed by projection back onto the unit sphere.
    pub fn em_update(&mut self, selection: &SlotSelection, q: &Query) -> Result<()> {
        if selection.is_empty() {
            return Err(Error::InvalidDimension("empty EM selection".into()));
        }
        if q.dim() != self.key_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.key_dim(),
                got: q.dim(),
            });
        }
        let p = self.params;
        let q = q.direction();
        let n = selection.len();
        let mut hist: Vec<f64> = selection
            .indices
            .iter()
            .map(|&i| p.alpha * self.histogram[i])
            .collect();
        let mut keys: Vec<Vec<f64>> = selection
            .indices
            .iter()
            .map(|&i| self.keys.row(i).to_vec())
            .collect();
        let mut gamma_prev = vec![0.0; n];
        let mut logs = vec![0.0; n];

        for _ in 0..p.em_iters {
            for (l, (k, h)) in logs.iter_mut().zip(keys.iter().zip(&hist)) {
                *l = p.kappa * dot(k, q) + (h + p.beta).ln();
            }
            let lse = log_sum_exp(&logs);
            for j in 0..n {
                let gamma = (logs[j] - lse).exp();
                let delta = gamma - gamma_prev[j];
                hist[j] += delta;
                if !(hist[j] > 0.0) {
                    return Err(Error::DegenerateHistogram {
                        slot: selection.indices[j],
                        value: hist[j],
                    });
                }
                gamma_prev[j] = gamma;
                if delta == 0.0 {
                    continue;
                }
                let step = delta / hist[j];
                let key = &mut keys[j];
                for (k, x) in key.iter_mut().zip(q) {
                    *k += step * (x - *k);
                }
                if normalize(key) == 0.0 {
                    // Antipodal half-step cancels the key exactly.
                    key.copy_from_slice(q);
                }
            }
        }

        for (j, &i) in selection.indices.iter().enumerate() {
            self.keys.row_mut(i).copy_from_slice(&keys[j]);
            self.histogram[i] = hist[j];
        }
        Ok(())
    }

    /// Overwrites the oldest slot (lowest index on ties) with the query:
    /// key `q`, value `y`, age 0, histogram the current mean.
    pub fn allocate_oldest(&mut self, q: &Query, y: Label) -> Result<usize> {
        if q.dim() != self.key_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.key_dim(),
                got: q.dim(),
            });
        }
        let mut slot = 0;
        for (i, &a) in self.ages.iter().enumerate() {
            if a > self.ages[slot] {
                slot = i;
            }
        }
        let mean = self.histogram.iter().sum::<f64>() / self.n_slots() as f64;
        self.keys.row_mut(slot).copy_from_slice(q.direction());
        self.values[slot] = y;
        self.ages[slot] = 0;
        self.histogram[slot] = mean;
        Ok(slot)
    }

    /// Every age advances by one, then touched slots reset to zero.
    pub fn tick_ages(&mut self, touched: &[usize]) {
        for a in &mut self.ages {
            *a = a.saturating_add(1);
        }
        for &i in touched {
            self.ages[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{MemoryParams, MemoryState};
    use super::*;
    use crate::linalg::Matrix;

    fn state(keys: &[Vec<f64>], hist: &[f64], values: &[u8], ages: &[u64], top_k: usize) -> MemoryState {
        MemoryState::from_parts(
            Matrix::from_rows(keys).unwrap(),
            values.iter().map(|&b| Label::from_bit(b)).collect(),
            ages.to_vec(),
            hist.to_vec(),
            MemoryParams {
                top_k,
                ..MemoryParams::default()
            },
        )
        .unwrap()
    }

    fn q(v: &[f64]) -> Query {
        Query::new(v.to_vec()).unwrap()
    }

    fn single(h: f64, iters: usize) -> MemoryState {
        let mut s = state(&[vec![1.0, 0.0]], &[h], &[1], &[0], 1);
        s.params.em_iters = iters;
        s
    }

    fn whole() -> SlotSelection {
        SlotSelection {
            indices: vec![0],
            scores: vec![1.0],
            weights: vec![1.0],
        }
    }

    #[test]
    fn single_slot_em_step() {
        let mut s = single(2.0, 1);
        s.em_update(&whole(), &q(&[0.0, 1.0])).unwrap();
        let h = 0.5f64.sqrt();
        assert!((s.key(0)[0] - h).abs() < 1e-12 && (s.key(0)[1] - h).abs() < 1e-12);
        assert_eq!(s.histogram()[0], 2.0);

        let mut s2 = single(2.0, 2);
        s2.em_update(&whole(), &q(&[0.0, 1.0])).unwrap();
        assert_eq!(s2.key(0), s.key(0));
        assert_eq!(s2.histogram(), s.histogram());
    }

    #[test]
    fn em_fixed_point() {
        let mut s = single(3.0, 3);
        s.em_update(&whole(), &q(&[1.0, 0.0])).unwrap();
        assert_eq!(s.key(0), &[1.0, 0.0]);
        assert_eq!(s.histogram()[0], 0.5 * 3.0 + 1.0);
    }

    #[test]
    fn em_antipodal_query_lands_on_query() {
        // alpha h = 1 and gamma = 1 give a half step, which cancels an antipodal key
        let mut s = single(2.0, 1);
        s.em_update(&whole(), &q(&[-1.0, 0.0])).unwrap();
        assert_eq!(s.key(0), &[-1.0, 0.0]);
    }

    #[test]
    fn fresh_memory_first_write_allocates() {
        let mut s = MemoryState::new(6, 3, MemoryParams { top_k: 4, ..MemoryParams::default() }, 5).unwrap();
        let mean = s.histogram().iter().sum::<f64>() / 6.0;
        let query = q(&[0.0, 0.6, 0.8]);
        let out = s.write(&query, Label::Real).unwrap();
        let WriteOutcome::Allocated(n) = out else { panic!("expected allocation") };
        assert_eq!(n, 0);
        assert_eq!(s.key(n), query.direction());
        assert_eq!(s.values()[n], Label::Real);
        assert_eq!(s.ages()[n], 0);
        assert_eq!(s.histogram()[n], mean);
    }

    #[test]
    fn em_path_leaves_values_alone() {
        let mut s = state(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            &[1.0, 1.0, 1.0],
            &[1, 0, 1],
            &[0, 0, 0],
            2,
        );
        let before = s.clone();
        let out = s.write(&q(&[0.8, 0.6]), Label::Real).unwrap();
        assert!(matches!(out, WriteOutcome::Updated(_)));
        assert_eq!(s.values(), before.values());
        for (i, slot) in out.touched().iter().enumerate() {
            assert_eq!(s.values()[*slot], Label::Real, "touched #{i}");
        }
        // the fake slot is untouched in key and histogram
        assert_eq!(s.key(1), before.key(1));
        assert_eq!(s.histogram()[1], before.histogram()[1]);
        assert_eq!(s.ages(), &[0, 1, 0]);
    }

    #[test]
    fn wrong_label_neighborhood_allocates() {
        let mut s = state(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]],
            &[2.0, 1.0, 3.0],
            &[0, 1, 0],
            &[5, 1, 9],
            1,
        );
        let out = s.write(&q(&[1.0, 0.0]), Label::Real).unwrap();
        assert_eq!(out, WriteOutcome::Allocated(2));
        assert_eq!(s.key(2), &[1.0, 0.0]);
        assert_eq!(s.histogram()[2], 2.0);
        assert_eq!(s.ages(), &[6, 2, 0]);
    }

    #[test]
    fn allocation_examples() {
        let mut s = state(&vec![vec![1.0]; 3], &[1.0; 3], &[0, 0, 0], &[5, 1, 9], 1);
        assert_eq!(s.allocate_oldest(&q(&[-1.0]), Label::Real).unwrap(), 2);
        let mut s = state(&vec![vec![1.0]; 2], &[1.0, 3.0], &[0, 0], &[2, 2], 1);
        assert_eq!(s.allocate_oldest(&q(&[-1.0]), Label::Real).unwrap(), 0);
        assert_eq!(s.histogram()[0], 2.0);
    }

    #[test]
    fn age_examples() {
        let mut s = state(&vec![vec![1.0]; 2], &[1.0; 2], &[0, 0], &[0, 0], 1);
        s.tick_ages(&[0]);
        assert_eq!(s.ages(), &[0, 1]);
        s.tick_ages(&[0, 1]);
        assert_eq!(s.ages(), &[0, 0]);
        s.tick_ages(&[]);
        assert_eq!(s.ages(), &[1, 1]);
    }

    #[test]
    fn running_average_examples() {
        let mut s = state(&[vec![1.0, 0.0]], &[1.0], &[1], &[0], 1);
        let out = s.write_running_average(&q(&[0.0, 1.0]), Label::Real).unwrap();
        assert_eq!(out, WriteOutcome::Updated(vec![0]));
        let h = 0.5f64.sqrt();
        assert!((s.key(0)[0] - h).abs() < 1e-12 && (s.key(0)[1] - h).abs() < 1e-12);
        assert_eq!(s.histogram()[0], 1.0);

        let mut s = state(&[vec![1.0, 0.0]], &[1.0], &[1], &[0], 1);
        s.write_running_average(&q(&[1.0, 0.0]), Label::Real).unwrap();
        assert_eq!(s.key(0), &[1.0, 0.0]);
    }

    #[test]
    fn running_average_shares_allocation() {
        let build = || state(&[vec![1.0, 0.0], vec![0.0, 0.0]], &[1.0, 1.0], &[0, 1], &[0, 3], 1);
        let mut a = build();
        let mut b = build();
        let query = q(&[0.6, 0.8]);
        assert_eq!(
            a.write(&query, Label::Real).unwrap(),
            b.write_running_average(&query, Label::Real).unwrap()
        );
        assert_eq!(a, b);
    }
}
