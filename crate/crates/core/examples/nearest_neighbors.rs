//! For a few generated shapes, lists the seven training images whose queries
//! are closest in cosine similarity.

use memorygan::cli::{TrainConfig, Trainer};
use memorygan::eval::nearest_training_neighbors;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> memorygan::Result<()> {
    let mut trainer = Trainer::new(TrainConfig::preset("shapes")?)?;
    for _ in 0..400 {
        trainer.step()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = trainer.model.generate(&mut rng, 4)?;
    let labels = trainer.train.labels.clone().unwrap_or_default();
    for (i, x) in samples.iter_rows().enumerate() {
        let ranked = nearest_training_neighbors(&trainer.model.discriminator, x, &trainer.train.samples, 7)?;
        let shown: Vec<String> = ranked
            .iter()
            .map(|(idx, s)| format!("#{idx}(class {}, {s:.3})", labels.get(*idx).copied().unwrap_or(0)))
            .collect();
        println!("sample {i}: {}", shown.join(" "));
    }
    Ok(())
}
