#![allow(dead_code)]

use memorygan::gan::{
    discriminator_loss, discriminator_loss_grad, generator_loss, generator_loss_grad, sample_latents, AblationMode,
    GanHyper, GanModel,
};
use memorygan::linalg::{dot, normalize};
use memorygan::nets::{central_difference_check, Activation, GradCheckReport, Mlp};
use memorygan::{Label, Matrix, MemoryParams, MemoryState, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_unit<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        if normalize(&mut v) > 1e-3 {
            return v;
        }
    }
}

/// Every key written, labels and histogram random.
pub fn random_memory<R: Rng>(rng: &mut R, n: usize, m: usize, params: MemoryParams) -> MemoryState {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_unit(rng, m)).collect();
    let values = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Real } else { Label::Fake })
        .collect();
    let hist = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
    MemoryState::from_parts(Matrix::from_rows(&rows).unwrap(), values, vec![0; n], hist, params).unwrap()
}

/// Sum over every slot of `v_i exp(kappa K_i.q)(h_i + beta)`, normalized; no top-k, no clip.
pub fn exhaustive_prob(mem: &MemoryState, q: &Query) -> f64 {
    let p = mem.params();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..mem.n_slots() {
        let w = (p.kappa * dot(mem.key(i), q.direction())).exp() * (mem.histogram()[i] + p.beta);
        num += mem.values()[i].value() * w;
        den += w;
    }
    num / den
}

fn random_batch<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Finite-difference reports for L_D and both generator objectives in every
/// mode, with the memory frozen.
pub fn gan_gradient_reports(seed: u64) -> Vec<(String, GradCheckReport)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for mode in AblationMode::ALL {
        let params = MemoryParams {
            top_k: 6,
            kappa: rng.random_range(1.0..4.0),
            ..MemoryParams::default()
        };
        let mut model = GanModel::new(mode, 2, 2, 12, 4, params, seed).unwrap();
        model.memory = random_memory(&mut rng, 12, 4, params);
        if model.memory.real_slot_count() == 0 {
            model.memory = random_memory(&mut rng, 12, 4, params);
        }
        let lambda = rng.random_range(0.1..1.0);

        let hyper = GanHyper { lambda, mode, ..GanHyper::default() };
        let real = random_batch(&mut rng, 4, 2);
        let latents = sample_latents(mode, &model.memory, &mut rng, 3, 2).unwrap();
        let fake = model.generator.predict(&latents.inputs).unwrap();
        let keys = latents.keys.clone();
        model.discriminator.zero_grad();
        discriminator_loss_grad(&mut model, &real, &fake, keys.as_ref(), &hyper).unwrap();
        let analytic = model.discriminator.grads().to_vec();
        let mut probe = model.clone();
        let mut p = model.discriminator.params().to_vec();
        let report = central_difference_check(&mut p, &analytic, |p| {
            probe.discriminator.params_mut().copy_from_slice(p);
            discriminator_loss(&probe, &real, &fake, keys.as_ref(), &hyper).unwrap().loss
        });
        out.push((format!("L_D {mode}"), report));

        for non_saturating in [false, true] {
            let hyper = GanHyper { lambda, mode, non_saturating, ..GanHyper::default() };
            let latents = sample_latents(mode, &model.memory, &mut rng, 4, 2).unwrap();
            model.generator.zero_grad();
            generator_loss_grad(&mut model, &latents, &hyper).unwrap();
            let analytic = model.generator.grads().to_vec();
            let mut probe = model.clone();
            let mut p = model.generator.params().to_vec();
            let report = central_difference_check(&mut p, &analytic, |p| {
                probe.generator.params_mut().copy_from_slice(p);
                generator_loss(&probe, &latents, &hyper).unwrap().loss
            });
            let name = if non_saturating { "L_G(-log D)" } else { "L_G" };
            out.push((format!("{name} {mode}"), report));
        }
    }
    out
}

/// Squared loss through a plain tanh network, no sphere projection.
pub fn plain_mlp_report(seed: u64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::new(3, &[(7, Activation::Tanh), (5, Activation::Relu), (2, Activation::Linear)], seed).unwrap();
    let x = random_batch(&mut rng, 4, 3);
    let target = random_batch(&mut rng, 4, 2);
    let loss = |out: &Matrix| -> f64 {
        out.as_slice().iter().zip(target.as_slice()).map(|(o, t)| 0.5 * (o - t).powi(2)).sum()
    };
    let (out, cache) = net.forward(&x).unwrap();
    let grad: Vec<f64> = out.as_slice().iter().zip(target.as_slice()).map(|(o, t)| o - t).collect();
    net.zero_grad();
    net.backward(&cache, &Matrix::from_vec(4, 2, grad).unwrap()).unwrap();
    let analytic = net.grads().to_vec();
    let mut probe = net.clone();
    let mut p = net.params().to_vec();
    central_difference_check(&mut p, &analytic, |p| {
        probe.params_mut().copy_from_slice(p);
        loss(&probe.predict(&x).unwrap())
    })
}
