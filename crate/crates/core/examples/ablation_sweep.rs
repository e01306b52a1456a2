//! Trains every ablation mode over a few seeds and prints median coverage.
//!
//! ```text
//! cargo run --release --example ablation_sweep -- [seeds] [iterations]
//! ```

use memorygan::cli::{run_ablate, TrainConfig};
use memorygan::gan::AblationMode;

fn main() -> memorygan::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(Ok(2), |s| s.parse()).unwrap_or(2);
    let mut config = TrainConfig::preset("ring-ablation")?;
    if let Some(it) = args.next() {
        config.set("iterations", &it)?;
    } else {
        config.iterations = 1000;
    }
    config.eval_every = config.iterations.max(1);
    config.output_dir = std::env::temp_dir().join("memorygan-ablation");

    let summary = run_ablate(&config, seeds)?;
    for mode in AblationMode::ALL {
        let (_, per_seed) = summary.coverage.iter().find(|(m, _)| *m == mode).unwrap();
        println!(
            "{:<10} median {:.3}  per seed {per_seed:.3?}",
            mode.as_str(),
            summary.median(mode).unwrap()
        );
    }
    println!("runs under {}", config.output_dir.display());
    Ok(())
}
