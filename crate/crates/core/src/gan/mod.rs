//! Adversarial training around the memory: memory-conditional sampling,
//! the discriminator and generator objectives with the key/sample
//! agreement term, one training iteration, and ablation variants.

mod losses;
mod sampling;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use losses::{
    discriminator_loss, discriminator_loss_grad, discriminator_probs, generator_loss, generator_loss_grad,
    info_term, LossValue,
};
pub use sampling::{mcgn_sample, sample_latents, LatentSample, Latents};
pub use train::{train_step, Bounds, Optimizers};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::memory::{MemoryParams, MemoryState};
use crate::nets::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Memory discriminator with EM writes and a memory-conditional generator.
    Full,
    /// Running-average key writes instead of EM.
    NoEm,
    /// Generator sees noise only; the memory discriminator is kept.
    NoMcgn,
    /// Plain discriminator network with a sigmoid head; no memory at all.
    NoMemory,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::Full,
        AblationMode::NoEm,
        AblationMode::NoMcgn,
        AblationMode::NoMemory,
    ];

    pub fn uses_memory(self) -> bool {
        self != AblationMode::NoMemory
    }

    /// Whether the generator is conditioned on memory keys.
    pub fn conditions_generator(self) -> bool {
        matches!(self, AblationMode::Full | AblationMode::NoEm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Full => "full",
            AblationMode::NoEm => "no_em",
            AblationMode::NoMcgn => "no_mcgn",
            AblationMode::NoMemory => "no_memory",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "ablation".into(),
                reason: format!("unknown mode `{s}`"),
            })
    }
}

/// Objective and optimization settings for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanHyper {
    pub mode: AblationMode,
    /// Weight of the key/sample agreement term.
    pub lambda: f64,
    pub noise_dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Use `-log D(G)` for the generator instead of `log(1 - D(G))`.
    pub non_saturating: bool,
}

impl Default for GanHyper {
    fn default() -> Self {
        Self {
            mode: AblationMode::Full,
            lambda: 2e-6,
            noise_dim: 2,
            batch_size: 64,
            learning_rate: 2e-4,
            non_saturating: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanLosses {
    pub d_loss: f64,
    pub g_loss: f64,
    pub info_term: f64,
}

/// The trainable pieces of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanModel {
    pub mode: AblationMode,
    pub generator: Mlp,
    /// Inference network `mu` (unit-norm output) when the memory is used,
    /// otherwise a logit network.
    pub discriminator: Mlp,
    pub memory: MemoryState,
}

impl GanModel {
    pub fn new(
        mode: AblationMode,
        data_dim: usize,
        noise_dim: usize,
        n_slots: usize,
        key_dim: usize,
        params: MemoryParams,
        seed: u64,
    ) -> Result<Self> {
        let gen_input = if mode.conditions_generator() {
            key_dim + noise_dim
        } else {
            noise_dim
        };
        let generator = Mlp::generator(gen_input, data_dim, seed.wrapping_add(1))?;
        let discriminator = if mode.uses_memory() {
            Mlp::inference_net(data_dim, key_dim, seed.wrapping_add(2))?
        } else {
            Mlp::logit_net(data_dim, seed.wrapping_add(2))?
        };
        let memory = MemoryState::new(n_slots, key_dim, params, seed.wrapping_add(3))?;
        Ok(Self {
            mode,
            generator,
            discriminator,
            memory,
        })
    }

    pub fn data_dim(&self) -> usize {
        self.generator.output_dim()
    }

    /// `n` generator samples drawn the same way as during training.
    pub fn generate<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Matrix> {
        let latents = sample_latents(self.mode, &self.memory, rng, n, self.noise_dim())?;
        self.generator.predict(&latents.inputs)
    }

    pub fn noise_dim(&self) -> usize {
        if self.mode.conditions_generator() {
            self.generator.input_dim() - self.memory.key_dim()
        } else {
            self.generator.input_dim()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in AblationMode::ALL {
            assert_eq!(m.as_str().parse::<AblationMode>().unwrap(), m);
        }
        assert!("bogus".parse::<AblationMode>().is_err());
    }

    #[test]
    fn generator_input_depends_on_mode() {
        let p = MemoryParams { top_k: 4, ..MemoryParams::default() };
        let full = GanModel::new(AblationMode::Full, 2, 3, 16, 5, p, 0).unwrap();
        assert_eq!(full.generator.input_dim(), 8);
        assert_eq!(full.noise_dim(), 3);
        let plain = GanModel::new(AblationMode::NoMemory, 2, 3, 16, 5, p, 0).unwrap();
        assert_eq!(plain.generator.input_dim(), 3);
        assert_eq!(plain.discriminator.output_dim(), 1);
    }
}
