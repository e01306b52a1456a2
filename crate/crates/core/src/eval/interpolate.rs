use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{normalize, Matrix};
use crate::memory::{Label, MemoryState, Query};
use crate::nets::Mlp;

/// Noise handling across an interpolation grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ZPolicy {
    /// One noise vector for every cell.
    Frozen(Vec<f64>),
    /// One noise vector per corner, bilinearly blended like the keys.
    Corners([Vec<f64>; 4]),
}

impl ZPolicy {
    fn dim(&self) -> usize {
        match self {
            ZPolicy::Frozen(z) => z.len(),
            ZPolicy::Corners(zs) => zs[0].len(),
        }
    }
}

/// Row-major `grid x grid` lattice of generated samples and the slot each
/// cell snapped to.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationGrid {
    pub grid: usize,
    pub samples: Matrix,
    pub snapped: Vec<usize>,
}

impl InterpolationGrid {
    pub fn cell(&self, row: usize, col: usize) -> (usize, &[f64]) {
        let i = row * self.grid + col;
        (self.snapped[i], self.samples.row(i))
    }

    /// Snapped slots at top-left, top-right, bottom-left, bottom-right.
    pub fn corners(&self) -> [usize; 4] {
        let g = self.grid - 1;
        [
            self.cell(0, 0).0,
            self.cell(0, g).0,
            self.cell(g, 0).0,
            self.cell(g, g).0,
        ]
    }
}

fn blend(corners: [&[f64]; 4], row_t: f64, col_t: f64) -> Vec<f64> {
    let w = [
        (1.0 - row_t) * (1.0 - col_t),
        (1.0 - row_t) * col_t,
        row_t * (1.0 - col_t),
        row_t * col_t,
    ];
    (0..corners[0].len())
        .map(|j| corners.iter().zip(w).map(|(c, w)| w * c[j]).sum())
        .collect()
}

/// Bilinear interpolation between the keys of four real slots (top-left,
/// top-right, bottom-left, bottom-right). Each blended key is renormalized,
/// snapped to its most probable slot, and rendered as `G([K_snapped, z])`.
pub fn interpolate_keys(
    memory: &MemoryState,
    generator: &Mlp,
    slots: [usize; 4],
    grid: usize,
    z_policy: &ZPolicy,
) -> Result<InterpolationGrid> {
    if grid < 2 {
        return Err(Error::InvalidConfig {
            field: "grid".into(),
            reason: "must be at least 2".into(),
        });
    }
    let distinct: BTreeSet<usize> = slots.iter().copied().collect();
    if distinct.len() < 4 {
        return Err(Error::DuplicateSlots(slots.to_vec()));
    }
    for &s in &slots {
        if s >= memory.n_slots() || memory.values()[s] != Label::Real || !memory.is_written(s) {
            return Err(Error::InvalidConfig {
                field: "slots".into(),
                reason: format!("slot {s} is not a written real slot"),
            });
        }
    }
    let key_dim = memory.key_dim();
    if generator.input_dim() != key_dim + z_policy.dim() {
        return Err(Error::DimensionMismatch {
            expected: generator.input_dim(),
            got: key_dim + z_policy.dim(),
        });
    }
    let keys = slots.map(|s| memory.key(s));
    let mut inputs = Matrix::zeros(grid * grid, generator.input_dim());
    let mut snapped = Vec::with_capacity(grid * grid);
    let step = 1.0 / (grid - 1) as f64;
    for r in 0..grid {
        for c in 0..grid {
            let (rt, ct) = (r as f64 * step, c as f64 * step);
            let mut key = blend(keys, rt, ct);
            if normalize(&mut key) == 0.0 {
                return Err(Error::InvalidDimension(format!("blended key vanishes at cell ({r}, {c})")));
            }
            let slot = memory.argmax_posterior(&Query::normalized(key)?)?;
            snapped.push(slot);
            let z = match z_policy {
                ZPolicy::Frozen(z) => z.clone(),
                ZPolicy::Corners(zs) => blend([&zs[0], &zs[1], &zs[2], &zs[3]], rt, ct),
            };
            let row = inputs.row_mut(r * grid + c);
            row[..key_dim].copy_from_slice(memory.key(slot));
            row[key_dim..].copy_from_slice(&z);
        }
    }
    Ok(InterpolationGrid {
        grid,
        samples: generator.predict(&inputs)?,
        snapped,
    })
}
