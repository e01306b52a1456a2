//! Finite-difference check of the discriminator and generator objectives,
//! including the key/sample agreement term and the sphere projection.

use memorygan::gan::{
    discriminator_loss, discriminator_loss_grad, generator_loss, generator_loss_grad, sample_latents, AblationMode,
    GanHyper, GanModel,
};
use memorygan::linalg::normalize;
use memorygan::nets::central_difference_check;
use memorygan::{Label, Matrix, MemoryParams, MemoryState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> memorygan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = MemoryParams {
        kappa: 3.0,
        top_k: 8,
        ..MemoryParams::default()
    };
    let (n, m) = (16, 4);
    let keys: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut k: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            normalize(&mut k);
            k
        })
        .collect();
    let memory = MemoryState::from_parts(
        Matrix::from_rows(&keys)?,
        (0..n).map(|i| Label::from_bit((i % 2) as u8)).collect(),
        vec![0; n],
        (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
        params,
    )?;
    let hyper = GanHyper {
        lambda: 0.5,
        ..GanHyper::default()
    };
    let mut model = GanModel::new(AblationMode::Full, 2, 2, n, m, params, 3)?;
    model.memory = memory;

    let real = Matrix::from_vec(6, 2, (0..12).map(|_| rng.random_range(-2.0..2.0)).collect())?;
    let latents = sample_latents(model.mode, &model.memory, &mut rng, 6, 2)?;
    let fake = model.generator.predict(&latents.inputs)?;
    let keys = latents.keys.clone();

    model.discriminator.zero_grad();
    discriminator_loss_grad(&mut model, &real, &fake, keys.as_ref(), &hyper)?;
    let analytic = model.discriminator.grads().to_vec();
    let mut probe = model.clone();
    let mut p = model.discriminator.params().to_vec();
    let d = central_difference_check(&mut p, &analytic, |p| {
        probe.discriminator.params_mut().copy_from_slice(p);
        discriminator_loss(&probe, &real, &fake, keys.as_ref(), &hyper).unwrap().loss
    });
    println!("L_D: {} params, max relative error {:.2e}", analytic.len(), d.max_relative_error);

    model.generator.zero_grad();
    generator_loss_grad(&mut model, &latents, &hyper)?;
    let analytic = model.generator.grads().to_vec();
    let mut probe = model.clone();
    let mut p = model.generator.params().to_vec();
    let g = central_difference_check(&mut p, &analytic, |p| {
        probe.generator.params_mut().copy_from_slice(p);
        generator_loss(&probe, &latents, &hyper).unwrap().loss
    });
    println!("L_G: {} params, max relative error {:.2e}", analytic.len(), g.max_relative_error);
    Ok(())
}
