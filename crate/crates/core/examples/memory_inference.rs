//! Posterior, top-k selection, and the discriminative probability on a
//! hand-built three-slot memory.

use memorygan::{Label, Matrix, MemoryParams, MemoryState, Query};

fn main() -> memorygan::Result<()> {
    let params = MemoryParams {
        kappa: 1.0,
        top_k: 2,
        ..MemoryParams::default()
    };
    let keys = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])?;
    let memory = MemoryState::from_parts(
        keys,
        vec![Label::Real, Label::Fake, Label::Fake],
        vec![0; 3],
        vec![1.0, 1.0, 8.0],
        params,
    )?;
    let q = Query::new(vec![1.0, 0.0, 0.0])?;

    println!("prior         {:.4?}", memory.slot_prior());
    println!("posterior     {:.4?}", memory.posterior_exact(&q)?);
    let sel = memory.top_k_slots(&q, None)?;
    println!("top-{} slots   {:?} weights {:.4?}", params.top_k, sel.indices, sel.weights);
    println!("real-only     {:?}", memory.top_k_slots(&q, Some(Label::Real))?.indices);
    let (d, grad) = memory.discriminative_prob_grad(&q)?;
    println!("D(x)          {d:.4}  dD/dq {grad:.4?}");
    println!("log p~(x|y=1) {:.4}", memory.biased_loglik_real(&q)?);

    let mut rng = rand::rng();
    let mut counts = [0usize; 3];
    for _ in 0..10_000 {
        counts[memory.sample_slot(&mut rng)?] += 1;
    }
    println!("slot draws    {counts:?} (only real slots are drawn)");
    Ok(())
}
