use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    discriminator_loss_grad, generator_loss_grad, sample_latents, AblationMode, GanHyper, GanLosses, GanModel,
    LossValue,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::memory::{Label, Query};
use crate::nets::Adam;

/// One Adam state per network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub generator: Adam,
    pub discriminator: Adam,
}

impl Optimizers {
    pub fn new(model: &GanModel, rate: f64) -> Self {
        Self {
            generator: Adam::new(model.generator.params().len(), rate),
            discriminator: Adam::new(model.discriminator.params().len(), rate),
        }
    }

    pub fn set_rate(&mut self, rate: f64) {
        self.generator.rate = rate;
        self.discriminator.rate = rate;
    }
}

/// Running extremes of every clipped probability and agreement term seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_prob: f64,
    pub max_prob: f64,
    pub min_info: f64,
    pub max_info: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            min_prob: f64::INFINITY,
            max_prob: f64::NEG_INFINITY,
            min_info: f64::INFINITY,
            max_info: f64::NEG_INFINITY,
        }
    }
}

impl Bounds {
    pub fn observe_probs(&mut self, probs: &[f64]) {
        for &p in probs {
            self.min_prob = self.min_prob.min(p);
            self.max_prob = self.max_prob.max(p);
        }
    }

    pub fn observe_info(&mut self, info: f64) {
        self.min_info = self.min_info.min(info);
        self.max_info = self.max_info.max(info);
    }

    fn observe(&mut self, value: &LossValue) {
        self.observe_probs(&value.probs);
        self.observe_info(value.info);
    }

    pub fn merge(&mut self, other: &Bounds) {
        self.min_prob = self.min_prob.min(other.min_prob);
        self.max_prob = self.max_prob.max(other.max_prob);
        self.min_info = self.min_info.min(other.min_info);
        self.max_info = self.max_info.max(other.max_info);
    }

    /// True when nothing observed so far left `[eps, 1 - eps]` or `[-kappa, kappa]`.
    pub fn within(&self, epsilon: f64, kappa: f64) -> bool {
        let probs_ok = self.min_prob > self.max_prob || (self.min_prob >= epsilon && self.max_prob <= 1.0 - epsilon);
        let info_ok = self.min_info > self.max_info || (self.min_info >= -kappa && self.max_info <= kappa);
        probs_ok && info_ok
    }
}

fn write_batch(model: &mut GanModel, queries: &Matrix, n_real: usize) -> Result<()> {
    let n_fake = queries.rows() - n_real;
    // Alternate real and fake writes so neither label monopolizes allocation.
    let order = (0..n_real.max(n_fake)).flat_map(|i| {
        let real = (i < n_real).then_some((i, Label::Real));
        let fake = (i < n_fake).then_some((n_real + i, Label::Fake));
        real.into_iter().chain(fake)
    });
    for (row, label) in order {
        let q = Query::new(queries.row(row).to_vec())?;
        match model.mode {
            AblationMode::NoEm => model.memory.write_running_average(&q, label)?,
            _ => model.memory.write(&q, label)?,
        };
    }
    Ok(())
}

/// One training iteration: a discriminator step on a real batch and a fresh
/// fake batch, memory writes of both batches' queries, then a generator step
/// on a resampled latent batch.
pub fn train_step<R: Rng + ?Sized>(
    model: &mut GanModel,
    optimizers: &mut Optimizers,
    real: &Matrix,
    rng: &mut R,
    hyper: &GanHyper,
    bounds: &mut Bounds,
) -> Result<GanLosses> {
    if real.rows() != hyper.batch_size {
        return Err(Error::DimensionMismatch {
            expected: hyper.batch_size,
            got: real.rows(),
        });
    }
    let noise_dim = model.noise_dim();
    let latents = sample_latents(model.mode, &model.memory, rng, hyper.batch_size, noise_dim)?;
    let fake = model.generator.predict(&latents.inputs)?;

    model.discriminator.zero_grad();
    let d = discriminator_loss_grad(model, real, &fake, latents.keys.as_ref(), hyper)?;
    bounds.observe(&d);
    let queries = if model.mode.uses_memory() {
        Some(model.discriminator.predict(&real.vstack(&fake)?)?)
    } else {
        None
    };
    let (params, grads) = model.discriminator.params_and_grads();
    optimizers.discriminator.step(params, grads)?;

    if let Some(queries) = queries {
        write_batch(model, &queries, real.rows())?;
    }

    let latents = sample_latents(model.mode, &model.memory, rng, hyper.batch_size, noise_dim)?;
    model.generator.zero_grad();
    let g = generator_loss_grad(model, &latents, hyper)?;
    bounds.observe(&g);
    let (params, grads) = model.generator.params_and_grads();
    optimizers.generator.step(params, grads)?;

    Ok(GanLosses {
        d_loss: d.loss,
        g_loss: g.loss,
        info_term: g.info,
    })
}
