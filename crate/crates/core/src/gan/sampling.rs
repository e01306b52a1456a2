use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::AblationMode;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::memory::MemoryState;
use crate::nets::Mlp;

/// One generator draw: noise, the sampled real slot, and that slot's key.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub noise: Vec<f64>,
    pub slot: usize,
    pub key: Vec<f64>,
}

/// A batch of generator inputs. `keys` and `slots` are present only for a
/// memory-conditional generator; keys are copies, constant for the step.
#[derive(Debug, Clone, PartialEq)]
pub struct Latents {
    pub inputs: Matrix,
    pub keys: Option<Matrix>,
    pub slots: Option<Vec<usize>>,
}

impl Latents {
    /// Generator inputs `[K_c, z]`, key first.
    pub fn from_samples(samples: &[LatentSample]) -> Result<Self> {
        let inputs: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| s.key.iter().chain(&s.noise).copied().collect())
            .collect();
        let keys: Vec<Vec<f64>> = samples.iter().map(|s| s.key.clone()).collect();
        Ok(Self {
            inputs: Matrix::from_rows(&inputs)?,
            keys: Some(Matrix::from_rows(&keys)?),
            slots: Some(samples.iter().map(|s| s.slot).collect()),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }
}

fn noise<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws `batch_size` latent samples, `c ~ P(c | v_c = 1)` and `z ~ N(0, I)`.
pub fn draw_conditional<R: Rng + ?Sized>(
    memory: &MemoryState,
    rng: &mut R,
    batch_size: usize,
    noise_dim: usize,
) -> Result<Vec<LatentSample>> {
    let sampler = memory.real_slot_sampler()?;
    Ok((0..batch_size)
        .map(|_| {
            let slot = sampler.sample(rng);
            LatentSample {
                noise: noise(rng, noise_dim),
                slot,
                key: memory.key(slot).to_vec(),
            }
        })
        .collect())
}

/// Memory-conditional generation: a fake batch from `G([K_c, z])` and the draws behind it.
pub fn mcgn_sample<R: Rng + ?Sized>(
    generator: &Mlp,
    memory: &MemoryState,
    rng: &mut R,
    batch_size: usize,
    noise_dim: usize,
) -> Result<(Matrix, Vec<LatentSample>)> {
    let samples = draw_conditional(memory, rng, batch_size, noise_dim)?;
    let latents = Latents::from_samples(&samples)?;
    Ok((generator.predict(&latents.inputs)?, samples))
}

/// Generator inputs for `mode`: conditional draws, or plain noise when the
/// generator is unconditioned.
pub fn sample_latents<R: Rng + ?Sized>(
    mode: AblationMode,
    memory: &MemoryState,
    rng: &mut R,
    batch_size: usize,
    noise_dim: usize,
) -> Result<Latents> {
    if mode.conditions_generator() {
        Latents::from_samples(&draw_conditional(memory, rng, batch_size, noise_dim)?)
    } else {
        let mut inputs = Matrix::zeros(batch_size, noise_dim);
        for r in 0..batch_size {
            inputs.row_mut(r).copy_from_slice(&noise(rng, noise_dim));
        }
        Ok(Latents {
            inputs,
            keys: None,
            slots: None,
        })
    }
}
