//! Streams labeled queries into a small memory and shows which writes run
//! incremental EM and which allocate the oldest slot.

use memorygan::linalg::normalize;
use memorygan::{Label, MemoryParams, MemoryState, Query, WriteOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> memorygan::Result<()> {
    let params = MemoryParams {
        kappa: 5.0,
        top_k: 3,
        ..MemoryParams::default()
    };
    let mut memory = MemoryState::new(8, 2, params, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // real queries near +x, fake queries near -x
    for step in 0..12 {
        let y = if step % 3 == 2 { Label::Fake } else { Label::Real };
        let center = if y == Label::Real { 0.0 } else { std::f64::consts::PI };
        let angle = center + rng.random_range(-0.4..0.4);
        let mut v = vec![angle.cos(), angle.sin()];
        normalize(&mut v);
        let q = Query::new(v)?;
        let outcome = memory.write(&q, y)?;
        let what = match &outcome {
            WriteOutcome::Allocated(s) => format!("allocated slot {s}"),
            WriteOutcome::Updated(s) => format!("EM over {s:?}"),
        };
        println!("{step:>2} {y:?} angle {angle:+.2}: {what}");
    }
    println!();
    for i in 0..memory.n_slots() {
        println!(
            "slot {i}: v={:?} h={:.4} age={} key={:.3?}",
            memory.values()[i],
            memory.histogram()[i],
            memory.ages()[i],
            memory.key(i)
        );
    }
    Ok(())
}
