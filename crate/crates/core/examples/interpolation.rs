//! Trains briefly on rendered shapes, then interpolates between four memory
//! keys and writes the grid as a PGM image.

use std::fs::File;

use memorygan::cli::{pick_slots, SlotPolicy, TrainConfig, Trainer};
use memorygan::eval::{interpolate_keys, write_grid_pgm, ZPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> memorygan::Result<()> {
    let mut config = TrainConfig::preset("shapes")?;
    config.iterations = 400;
    let mut trainer = Trainer::new(config)?;
    for _ in 0..400 {
        trainer.step()?;
    }
    let model = &trainer.model;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let slots = pick_slots(model, SlotPolicy::Random, &mut rng)?;
    let grid = interpolate_keys(
        &model.memory,
        &model.generator,
        slots,
        8,
        &ZPolicy::Frozen(vec![0.0; model.noise_dim()]),
    )?;
    for r in 0..grid.grid {
        let row: Vec<usize> = (0..grid.grid).map(|c| grid.cell(r, c).0).collect();
        println!("{row:?}");
    }
    let path = std::env::temp_dir().join("memorygan-interpolation.pgm");
    write_grid_pgm(File::create(&path)?, trainer.fingerprint(), &grid, 8)?;
    println!("corners {slots:?}, grid written to {}", path.display());
    Ok(())
}
