//! Discriminator and generator objectives with analytic gradients.
//!
//! `L_D = -E[ln D(x)] - E[ln(1 - D(G(z, K)))] + lambda I`
//! `L_G =  E[ln(1 - D(G(z, K)))] + lambda I`
//!
//! where `I = -kappa E[K^T mu(G(z, K))]`. Memory keys enter `I` as
//! constants; the memory itself is never differentiated.

use super::{GanHyper, GanModel, Latents};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::memory::Query;
use crate::nets::{ForwardCache, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// The agreement term `I` (zero when the generator is unconditioned).
    pub info: f64,
    /// Every clipped discriminator probability evaluated for the loss.
    pub probs: Vec<f64>,
}

struct Discriminated {
    probs: Vec<f64>,
    /// `dD / d(network output)` per row.
    dprob: Matrix,
    outputs: Matrix,
    cache: ForwardCache,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn discriminate(model: &GanModel, x: &Matrix) -> Result<Discriminated> {
    let (outputs, cache) = model.discriminator.forward(x)?;
    let eps = model.memory.params().epsilon;
    let mut probs = Vec::with_capacity(x.rows());
    let mut dprob = Matrix::zeros(x.rows(), outputs.cols());
    if model.mode.uses_memory() {
        for r in 0..outputs.rows() {
            let q = Query::new(outputs.row(r).to_vec())?;
            let (p, g) = model.memory.discriminative_prob_grad(&q)?;
            probs.push(p);
            dprob.row_mut(r).copy_from_slice(&g);
        }
    } else {
        for r in 0..outputs.rows() {
            let p = sigmoid(outputs.get(r, 0));
            if p < eps || p > 1.0 - eps {
                probs.push(p.clamp(eps, 1.0 - eps));
            } else {
                probs.push(p);
                dprob.set(r, 0, p * (1.0 - p));
            }
        }
    }
    Ok(Discriminated {
        probs,
        dprob,
        outputs,
        cache,
    })
}

/// Clipped `D(x)` for every row of `x`.
pub fn discriminator_probs(model: &GanModel, x: &Matrix) -> Result<Vec<f64>> {
    Ok(discriminate(model, x)?.probs)
}

/// `I = -(kappa / B) sum_b K_b . mu(x_b)` for a fake batch and its keys.
pub fn info_term(kappa: f64, inference: &Mlp, fake: &Matrix, keys: &Matrix) -> Result<f64> {
    let queries = inference.predict(fake)?;
    info_from_queries(kappa, &queries, keys)
}

fn info_from_queries(kappa: f64, queries: &Matrix, keys: &Matrix) -> Result<f64> {
    if queries.rows() != keys.rows() || queries.cols() != keys.cols() {
        return Err(Error::DimensionMismatch {
            expected: queries.rows() * queries.cols(),
            got: keys.rows() * keys.cols(),
        });
    }
    if queries.rows() == 0 {
        return Ok(0.0);
    }
    let total: f64 = queries
        .iter_rows()
        .zip(keys.iter_rows())
        .map(|(q, k)| dot(q, k))
        .sum();
    Ok(-kappa * total / queries.rows() as f64)
}

/// Adds `d(lambda I)/dq = -lambda kappa K_b / B` into `grad`.
fn add_info_grad(grad: &mut Matrix, keys: &Matrix, scale: f64) {
    for r in 0..grad.rows() {
        for (g, k) in grad.row_mut(r).iter_mut().zip(keys.row(r)) {
            *g += scale * k;
        }
    }
}

fn check_batch(x: &Matrix, what: &str) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::InvalidDimension(format!("empty {what} batch")));
    }
    Ok(())
}

fn info_keys<'a>(model: &GanModel, keys: Option<&'a Matrix>) -> Option<&'a Matrix> {
    keys.filter(|_| model.mode.conditions_generator())
}

fn d_objective(
    model: &GanModel,
    real: &Matrix,
    fake: &Matrix,
    fake_keys: Option<&Matrix>,
    hyper: &GanHyper,
) -> Result<(LossValue, Matrix, ForwardCache)> {
    check_batch(real, "real")?;
    check_batch(fake, "fake")?;
    let nr = real.rows();
    let nf = fake.rows() as f64;
    let d = discriminate(model, &real.vstack(fake)?)?;
    let mut grad = d.dprob;
    let mut loss = 0.0;
    for (r, &p) in d.probs.iter().enumerate() {
        let coef = if r < nr {
            loss -= p.ln() / nr as f64;
            -1.0 / (p * nr as f64)
        } else {
            loss -= (1.0 - p).ln() / nf;
            1.0 / ((1.0 - p) * nf)
        };
        grad.row_mut(r).iter_mut().for_each(|g| *g *= coef);
    }
    let mut info = 0.0;
    if let Some(keys) = info_keys(model, fake_keys) {
        let kappa = model.memory.params().kappa;
        let (_, fake_q) = d.outputs.split_rows(nr);
        info = info_from_queries(kappa, &fake_q, keys)?;
        loss += hyper.lambda * info;
        let (head, mut tail) = grad.split_rows(nr);
        add_info_grad(&mut tail, keys, -hyper.lambda * kappa / nf);
        grad = head.vstack(&tail)?;
    }
    Ok((
        LossValue {
            loss,
            info,
            probs: d.probs,
        },
        grad,
        d.cache,
    ))
}

/// `L_D` for a real batch and a fixed fake batch. `fake_keys` are the keys
/// the fakes were generated from; without them the agreement term is zero.
pub fn discriminator_loss(
    model: &GanModel,
    real: &Matrix,
    fake: &Matrix,
    fake_keys: Option<&Matrix>,
    hyper: &GanHyper,
) -> Result<LossValue> {
    Ok(d_objective(model, real, fake, fake_keys, hyper)?.0)
}

/// `L_D`, accumulating its gradient into the discriminator network.
pub fn discriminator_loss_grad(
    model: &mut GanModel,
    real: &Matrix,
    fake: &Matrix,
    fake_keys: Option<&Matrix>,
    hyper: &GanHyper,
) -> Result<LossValue> {
    let (value, grad, cache) = d_objective(model, real, fake, fake_keys, hyper)?;
    model.discriminator.backward(&cache, &grad)?;
    Ok(value)
}

struct GeneratorPass {
    value: LossValue,
    gen_cache: ForwardCache,
    disc_cache: ForwardCache,
    grad: Matrix,
}

fn g_objective(model: &GanModel, latents: &Latents, hyper: &GanHyper) -> Result<GeneratorPass> {
    check_batch(&latents.inputs, "latent")?;
    let (fake, gen_cache) = model.generator.forward(&latents.inputs)?;
    let n = fake.rows() as f64;
    let d = discriminate(model, &fake)?;
    let mut grad = d.dprob;
    let mut loss = 0.0;
    for (r, &p) in d.probs.iter().enumerate() {
        let coef = if hyper.non_saturating {
            loss -= p.ln() / n;
            -1.0 / (p * n)
        } else {
            loss += (1.0 - p).ln() / n;
            -1.0 / ((1.0 - p) * n)
        };
        grad.row_mut(r).iter_mut().for_each(|g| *g *= coef);
    }
    let mut info = 0.0;
    if let Some(keys) = info_keys(model, latents.keys.as_ref()) {
        let kappa = model.memory.params().kappa;
        info = info_from_queries(kappa, &d.outputs, keys)?;
        loss += hyper.lambda * info;
        add_info_grad(&mut grad, keys, -hyper.lambda * kappa / n);
    }
    Ok(GeneratorPass {
        value: LossValue {
            loss,
            info,
            probs: d.probs,
        },
        gen_cache,
        disc_cache: d.cache,
        grad,
    })
}

/// `L_G` for a batch of generator inputs.
pub fn generator_loss(model: &GanModel, latents: &Latents, hyper: &GanHyper) -> Result<LossValue> {
    Ok(g_objective(model, latents, hyper)?.value)
}

/// `L_G`, accumulating its gradient into the generator only. The
/// discriminator and memory are read but not modified.
pub fn generator_loss_grad(model: &mut GanModel, latents: &Latents, hyper: &GanHyper) -> Result<LossValue> {
    let pass = g_objective(model, latents, hyper)?;
    let dx = model.discriminator.backward_input(&pass.disc_cache, &pass.grad)?;
    model.generator.backward(&pass.gen_cache, &dx)?;
    Ok(pass.value)
}
