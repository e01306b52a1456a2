//! Round-trips rendered shapes through IDX files, then trains a few steps
//! from them the way a Fashion-MNIST run would.
//!
//! ```text
//! cargo run --release --example idx_data -- [images.idx labels.idx]
//! ```

use memorygan::cli::{TrainConfig, Trainer};
use memorygan::datasets::{load_idx_pair, synthetic_shapes, ShapesConfig};

fn main() -> memorygan::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::env::temp_dir().join("memorygan-idx");
    std::fs::create_dir_all(&dir)?;
    let (images, labels) = match args.as_slice() {
        [i, l] => (i.into(), l.into()),
        _ => {
            let shapes = synthetic_shapes(&ShapesConfig::new(8, 100), 0)?;
            let (i, l) = (dir.join("shapes-images.idx"), dir.join("shapes-labels.idx"));
            shapes.save_idx(&i, Some(&l), 8, 8)?;
            (i, l)
        }
    };
    let data = load_idx_pair(&images, &labels)?;
    println!("{} images of dimension {}", data.len(), data.dim());

    let mut config = TrainConfig::default();
    config.set("dataset", "idx")?;
    config.idx_images = Some(images);
    config.idx_labels = Some(labels);
    config.held_out = data.len() / 10;
    config.n_slots = 512;
    config.key_dim = 32;
    config.top_k = 64;
    let mut trainer = Trainer::new(config)?;
    for i in 1..=50 {
        let l = trainer.step()?;
        if i % 10 == 0 {
            println!("step {i}: d {:.3} g {:.3} info {:+.3}", l.d_loss, l.g_loss, l.info_term);
        }
    }
    let r = trainer.evaluate()?;
    println!("prior entropy {:.3}, real slot fraction {:.3}", r.prior_entropy, r.real_slot_fraction);
    Ok(())
}
